use ldgap_core::cumulant::{nullity_predicate, CumulantEngine, MultiIndex};
use ldgap_core::ModelSpec;
use num_rational::Rational64;

fn specs() -> Vec<ModelSpec> {
    let mut v = Vec::new();
    for (n, p) in [(2, 1), (2, 2), (3, 2)] {
        for k in [2, 3] {
            v.push(ModelSpec::clustering(n, p, k));
            v.push(ModelSpec::sparse(n, p, k, Rational64::new(1, 2)));
            v.push(ModelSpec::biclustering(n, p, k, 2));
        }
    }
    v
}

#[test]
fn routes_agree_up_to_degree_four() {
    let mut nonzero = 0;
    for spec in specs() {
        let mut eng = CumulantEngine::new(&spec);
        for alpha in MultiIndex::all_up_to(spec.n, spec.p, 4) {
            let brute = eng.bruteforce(true, &alpha).unwrap();
            let cond = eng.conditioned(&alpha).unwrap();
            assert_eq!(brute.coeff, cond.coeff, "{:?} α={alpha}", spec.kind);
            if !brute.is_zero() {
                nonzero += 1;
                assert_eq!(brute.lambda_power, alpha.total(), "homogeneity in λ");
                assert!(!nullity_predicate(spec.kind, &alpha), "flagged α={alpha} has κ≠0");
            }
        }
    }
    assert!(nonzero > 20, "{nonzero}");
}

#[test]
fn relabeling_invariance() {
    // rows 0 and 1 may swap with each other; rows >= 2 and all columns permute freely
    let spec = ModelSpec::clustering(4, 2, 2);
    let mut eng = CumulantEngine::new(&spec);
    let row_perms: [[usize; 4]; 3] = [[1, 0, 2, 3], [0, 1, 3, 2], [1, 0, 3, 2]];
    for alpha in MultiIndex::all_up_to(4, 2, 4) {
        let base = eng.bruteforce(true, &alpha).unwrap();
        for perm in &row_perms {
            let moved = alpha.permute_rows(perm);
            assert_eq!(eng.bruteforce(true, &moved).unwrap().coeff, base.coeff, "α={alpha}");
        }
        let swapped = alpha.permute_cols(&[1, 0]);
        assert_eq!(eng.bruteforce(true, &swapped).unwrap().coeff, base.coeff);
    }
}

#[test]
fn cumulant_without_x_is_symmetric_in_rows() {
    // without x no row is distinguished, so every row permutation is allowed
    let spec = ModelSpec::sparse(3, 2, 2, Rational64::new(1, 3));
    let mut eng = CumulantEngine::new(&spec);
    for alpha in MultiIndex::all_up_to(3, 2, 4) {
        let base = eng.bruteforce(false, &alpha).unwrap();
        let moved = alpha.permute_rows(&[2, 0, 1]);
        assert_eq!(eng.bruteforce(false, &moved).unwrap().coeff, base.coeff);
    }
}
