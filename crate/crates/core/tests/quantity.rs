use factstory_core::extraction::quantity::{normalize_quantity, QuantityError};
use factstory_testkit::quantity_cases;
use proptest::prelude::*;
use rust_decimal::prelude::ToPrimitive;

#[test]
fn hand_checked_table_matches_exactly() {
    let cases = quantity_cases();
    assert_eq!(cases.len(), 60);
    let mut failures = Vec::new();
    for c in &cases {
        match normalize_quantity(&c.token) {
            Ok(q) if q.value.to_string() == c.value && q.unit == c.unit => {}
            other => failures.push(format!("{:?}: expected ({}, {:?}), got {other:?}", c.token, c.value, c.unit)),
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn non_quantities_are_rejected() {
    for token in ["", "abc", "million", "%", "1.2.3", "$%"] {
        assert!(matches!(normalize_quantity(token), Err(QuantityError::NotAQuantity(_))), "{token:?}");
    }
}

fn group_thousands(digits: &str) -> String {
    let mut out = String::new();
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

/// A token plus the number it denotes, built from its parts.
fn numeric_token() -> impl Strategy<Value = (String, f64)> {
    let scales = prop_oneof![
        Just(("", 1.0)),
        Just((" thousand", 1e3)),
        Just(("K", 1e3)),
        Just((" million", 1e6)),
        Just(("M", 1e6)),
        Just((" billion", 1e9)),
        Just(("B", 1e9)),
        Just((" trillion", 1e12)),
    ];
    let tails = prop_oneof![Just(""), Just("%"), Just("$"), Just(" hours")];
    (any::<bool>(), 0u64..10_000_000, proptest::option::of(0u32..1000), any::<bool>(), scales, tails).prop_map(
        |(neg, int, frac, grouped, (suffix, factor), tail)| {
            let int_s = int.to_string();
            let mut body = if grouped { group_thousands(&int_s) } else { int_s.clone() };
            let mut exact = int_s.clone();
            if let Some(f) = frac {
                let f = format!("{f:03}");
                body.push('.');
                body.push_str(&f);
                exact.push('.');
                exact.push_str(&f);
            }
            let (suffix, factor) = if tail == "%" { ("", 1.0) } else { (suffix, factor) };
            let sign = if neg { "-" } else { "" };
            let token = match tail {
                "$" => format!("{sign}${body}{suffix}"),
                t => format!("{sign}{body}{suffix}{t}"),
            };
            let value: f64 = exact.parse::<f64>().unwrap() * factor * if neg { -1.0 } else { 1.0 };
            (token, value)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn value_times_scale_round_trips((token, expected) in numeric_token()) {
        let q = normalize_quantity(&token).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let got = q.magnitude().to_f64().unwrap();
        prop_assert!((got - expected).abs() <= 1e-9 * expected.abs().max(1.0), "{token}: {got} vs {expected}");
    }
}
