//! User and function priorities.

use crate::error::{Error, Result};
use crate::model::{ServerlessFunction, Ssr};

/// Euclidean distance between the fog node and a user, in km.
pub fn user_distance(fog: (f64, f64), user: (f64, f64)) -> f64 {
    (user.0 - fog.0).hypot(user.1 - fog.1)
}

/// Distance-based priority `d / D`; farther users score higher.
pub fn distance_priority(distance: f64, cap: f64) -> Result<f64> {
    if !(cap > 0.0 && cap.is_finite()) {
        return Err(Error::Domain(format!("distance cap {cap} must be positive")));
    }
    if !(0.0..=cap).contains(&distance) {
        return Err(Error::Domain(format!(
            "distance {distance} outside coverage radius {cap}"
        )));
    }
    Ok(distance / cap)
}

/// Latency-based priority `l / max(latencies)`.
///
/// Ties in the maximum are harmless, only its value is used.
pub fn latency_priority(latency: f64, all_latencies: &[f64]) -> Result<f64> {
    if all_latencies.is_empty() {
        return Err(Error::Domain("no latencies to normalize against".into()));
    }
    if let Some(bad) = all_latencies.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(Error::Domain(format!("latency {bad} must be positive")));
    }
    if !(latency > 0.0 && latency.is_finite()) {
        return Err(Error::Domain(format!("latency {latency} must be positive")));
    }
    let max = all_latencies.iter().copied().fold(f64::MIN, f64::max);
    if latency > max {
        return Err(Error::Domain(format!(
            "latency {latency} is not among the normalizing latencies"
        )));
    }
    Ok(latency / max)
}

/// Blend of distance and latency priority, `w·pd + pl·(1 − w)`.
pub fn user_priority(pd: f64, pl: f64, blend: f64) -> Result<f64> {
    for (name, v) in [("distance priority", pd), ("latency priority", pl), ("blend", blend)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Domain(format!("{name} {v} outside [0, 1]")));
        }
    }
    Ok(blend * pd + pl * (1.0 - blend))
}

/// Priority of one function of `ssr`:
/// `1 / (Δ + ((5 − q)/5)·((maxK − K)/maxK)·((maxκ − κ)/maxκ))`,
/// with the maxima taken over the same request.
pub fn function_priority(func: &ServerlessFunction, ssr: &Ssr, delta: f64) -> Result<f64> {
    let (max_code, max_input) = ssr_size_maxima(ssr, delta)?;
    Ok(priority_from_maxima(func, max_code, max_input, delta))
}

/// Priorities of every function of `ssr`, in order.
pub fn ssr_function_priorities(ssr: &Ssr, delta: f64) -> Result<Vec<f64>> {
    let (max_code, max_input) = ssr_size_maxima(ssr, delta)?;
    Ok(ssr
        .functions
        .iter()
        .map(|f| priority_from_maxima(f, max_code, max_input, delta))
        .collect())
}

fn ssr_size_maxima(ssr: &Ssr, delta: f64) -> Result<(f64, f64)> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Domain(format!("priority delta {delta} must be positive")));
    }
    if ssr.functions.is_empty() {
        return Err(Error::Domain("empty SSR has no function priorities".into()));
    }
    let max_code = ssr.functions.iter().map(|f| f.code_size).fold(0.0, f64::max);
    let max_input = ssr.functions.iter().map(|f| f.input_size).fold(0.0, f64::max);
    if !(max_code > 0.0 && max_input > 0.0) {
        return Err(Error::Domain(
            "degenerate SSR: maximum code size or input size is zero".into(),
        ));
    }
    Ok((max_code, max_input))
}

fn priority_from_maxima(func: &ServerlessFunction, max_code: f64, max_input: f64, delta: f64) -> f64 {
    let critical = (5.0 - f64::from(func.critical_value)) / 5.0;
    let code = (max_code - func.code_size) / max_code;
    let input = (max_input - func.input_size) / max_input;
    1.0 / (delta + critical * code * input)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ResourceVector;
    use proptest::prelude::*;

    fn func(code: f64, input: f64, q: u8) -> ServerlessFunction {
        ServerlessFunction::new(code, input, q, ResourceVector::ZERO, ResourceVector::ZERO)
    }

    #[test]
    fn distance_examples() {
        assert_eq!(user_distance((0.0, 0.0), (3.0, 4.0)), 5.0);
        assert_eq!(user_distance((7.0, 2.0), (7.0, 2.0)), 0.0);
        assert!((user_distance((1.0, 1.0), (4.0, 5.0)) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn distance_priority_examples() {
        assert_eq!(distance_priority(0.0, 100.0).unwrap(), 0.0);
        assert_eq!(distance_priority(100.0, 100.0).unwrap(), 1.0);
        assert!((distance_priority(25.0, 100.0).unwrap() - 0.25).abs() < 1e-12);
        assert!(distance_priority(101.0, 100.0).is_err());
        assert!(distance_priority(1.0, 0.0).is_err());
    }

    #[test]
    fn latency_priority_examples() {
        let lat = [20.0, 80.0, 40.0];
        assert_eq!(latency_priority(80.0, &lat).unwrap(), 1.0);
        assert!((latency_priority(20.0, &lat).unwrap() - 0.25).abs() < 1e-12);
        let equal = [30.0; 4];
        assert!(equal.iter().all(|l| latency_priority(*l, &equal).unwrap() == 1.0));
        assert!(latency_priority(1.0, &[]).is_err());
        assert!(latency_priority(-1.0, &[10.0]).is_err());
        assert!(latency_priority(5.0, &[10.0, 0.0]).is_err());
    }

    #[test]
    fn user_priority_examples() {
        assert!((user_priority(0.3, 0.9, 1.0).unwrap() - 0.3).abs() < 1e-12);
        assert!((user_priority(0.3, 0.9, 0.0).unwrap() - 0.9).abs() < 1e-12);
        assert!((user_priority(0.4, 0.8, 0.5).unwrap() - 0.6).abs() < 1e-12);
        assert!(user_priority(1.2, 0.5, 0.5).is_err());
    }

    #[test]
    fn function_priority_examples() {
        let ssr = Ssr {
            user_id: 0,
            functions: vec![func(100.0, 500.0, 1), func(500.0, 2500.0, 5), func(200.0, 800.0, 5)],
        };
        // q = 5 zeroes the product
        assert!((function_priority(&ssr.functions[2], &ssr, 0.2).unwrap() - 5.0).abs() < 1e-12);
        // K = maxK zeroes the size factor
        assert!((function_priority(&ssr.functions[1], &ssr, 0.2).unwrap() - 5.0).abs() < 1e-12);
        // 1 / (0.2 + 0.8 * 0.8 * 0.8)
        let p = function_priority(&ssr.functions[0], &ssr, 0.2).unwrap();
        assert!((p - 1.0 / 0.712).abs() < 1e-9);
        assert!((p - 1.404494).abs() < 1e-6);
    }

    #[test]
    fn degenerate_ssr_is_an_error() {
        let ssr = Ssr {
            user_id: 0,
            functions: vec![func(10.0, 0.0, 1)],
        };
        assert!(function_priority(&ssr.functions[0], &ssr, 0.2).is_err());
        let empty = Ssr {
            user_id: 0,
            functions: vec![],
        };
        assert!(ssr_function_priorities(&empty, 0.2).is_err());
    }

    proptest! {
        #[test]
        fn user_priority_in_unit_interval(pd in 0.0..=1.0f64, pl in 0.0..=1.0f64, w in 0.0..=1.0f64) {
            let p = user_priority(pd, pl, w).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
            prop_assert!(p >= pd.min(pl) - 1e-15 && p <= pd.max(pl) + 1e-15);
        }

        #[test]
        fn half_blend_is_mean(pd in 0.0..=1.0f64, pl in 0.0..=1.0f64) {
            let p = user_priority(pd, pl, 0.5).unwrap();
            prop_assert!((p - (pd + pl) / 2.0).abs() < 1e-15);
        }

        #[test]
        fn latency_ranks_are_scale_invariant(
            lat in prop::collection::vec(1.0..200.0f64, 2..20),
            scale in 0.01..100.0f64,
        ) {
            let scaled: Vec<f64> = lat.iter().map(|l| l * scale).collect();
            let a: Vec<f64> = lat.iter().map(|l| latency_priority(*l, &lat).unwrap()).collect();
            let b: Vec<f64> = scaled.iter().map(|l| latency_priority(*l, &scaled).unwrap()).collect();
            for i in 0..lat.len() {
                for j in 0..lat.len() {
                    if lat[i] < lat[j] {
                        prop_assert!(a[i] < a[j] && b[i] < b[j]);
                    }
                }
            }
        }

        #[test]
        fn function_priority_bounded_and_monotone(
            sizes in prop::collection::vec((1.0..500.0f64, 1.0..2500.0f64, 1u8..=5), 1..10),
            delta in 0.01..1.0f64,
        ) {
            let ssr = Ssr {
                user_id: 0,
                functions: sizes.iter().map(|(k, i, q)| func(*k, *i, *q)).collect(),
            };
            let ps = ssr_function_priorities(&ssr, delta).unwrap();
            for p in &ps {
                prop_assert!(*p >= 1.0 / (delta + 1.0) - 1e-12 && *p <= 1.0 / delta + 1e-12);
            }
            // raising the critical value never lowers the priority
            let mut bumped = ssr.clone();
            if bumped.functions[0].critical_value < 5 {
                bumped.functions[0].critical_value += 1;
                let p = function_priority(&bumped.functions[0], &bumped, delta).unwrap();
                prop_assert!(p >= ps[0]);
            }
        }
    }
}
