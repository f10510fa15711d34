mod common;

use cdare::io::{self, InstanceError, OptionsBlock, ParsedInstance};
use cdare::linalg::CVec;
use cdare::ProblemInstance;
use common::*;
use proptest::prelude::*;
use rand::Rng;

fn random_parsed(seed: u64, n: usize, m: usize, extras: bool) -> ParsedInstance {
    let mut rng = rng(seed);
    let r = random_pd(&mut rng, m, 1.0);
    let p = ProblemInstance::new(
        random_complex(&mut rng, n, n),
        random_complex(&mut rng, n, m),
        r.into_inner(),
        random_hermitian(&mut rng, n).into_inner(),
    )
    .unwrap();
    let mut parsed = ParsedInstance::new(p);
    if extras {
        parsed.x_t_witness = Some(random_hermitian(&mut rng, n));
        parsed.x_p_witness = Some(random_hermitian(&mut rng, n));
        parsed.x0 = Some(random_hermitian(&mut rng, n));
        parsed.x0_state = Some(CVec::from_fn(n, |_, _| cnormal(&mut rng)));
        parsed.options = Some(OptionsBlock {
            tol: Some(rng.random_range(1e-14..1e-6)),
            max_iter: Some(rng.random_range(1..100_000)),
            psd_tol: None,
            check_monotone: Some(rng.random()),
            check_stability: None,
        });
    }
    parsed
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn serialize_then_parse_is_bit_exact(seed in any::<u64>(), n in 1usize..=5, m in 1usize..=3, extras in any::<bool>()) {
        let parsed = random_parsed(seed, n, m, extras);
        let text = io::serialize_instance(&parsed);
        let back = io::parse_instance_str(&text).unwrap();
        prop_assert_eq!(&back, &parsed);
        prop_assert_eq!(io::serialize_instance(&back), text);
    }

    #[test]
    fn matrix_file_round_trip(seed in any::<u64>(), n in 1usize..=5) {
        let x = random_hermitian(&mut rng(seed), n);
        let text = serde_json::to_string(&x).unwrap();
        prop_assert_eq!(io::parse_matrix_str(&text, n).unwrap(), x);
    }
}

#[test]
fn file_round_trip_through_disk() {
    let parsed = random_parsed(7, 3, 2, true);
    let dir = std::env::temp_dir().join(format!("cdare-io-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("instance.json");
    std::fs::write(&path, io::serialize_instance(&parsed)).unwrap();
    assert_eq!(io::parse_instance(&path).unwrap(), parsed);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn missing_file_is_an_io_error() {
    let err = io::parse_instance("/nonexistent/instance.json").unwrap_err();
    assert!(matches!(err, InstanceError::Io { .. }));
}

#[test]
fn short_state_vector_names_field() {
    let text = r#"{"n":2,"m":1,"A":[[0,0],[0,0],[0,0],[0,0]],"B":[[1,0],[0,0]],"R":[[1,0]],
        "H":[[1,0],[0,0],[0,0],[1,0]],"x0_state":[[1,0]]}"#;
    match io::parse_instance_str(text).unwrap_err() {
        InstanceError::Field { field, .. } => assert_eq!(field, "x0_state"),
        e => panic!("unexpected {e}"),
    }
}
