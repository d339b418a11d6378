use mwp_core::equation::{evaluate, format_rational, parse_equation, parse_rational, solve, to_canonical_string};
use mwp_core::{Equation, Expr, Op, Rational};
use num_bigint::BigInt;
use proptest::prelude::*;

fn leaf() -> impl Strategy<Value = Expr> {
    (0i64..10_000, 0u32..3).prop_map(|(k, places)| {
        Expr::Num(Rational::new(BigInt::from(k), BigInt::from(10i64.pow(places))))
    })
}

fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 31, 2, |inner| {
        (prop::sample::select(vec![Op::Add, Op::Sub, Op::Mul, Op::Div]), inner.clone(), inner)
            .prop_map(|(op, l, r)| Expr::bin(op, l, r))
    })
}

proptest! {
    #[test]
    fn canonical_text_round_trips(rhs in expr()) {
        let eq = Equation::new("x", rhs);
        let text = to_canonical_string(&eq);
        let back = parse_equation(&text).unwrap();
        prop_assert_eq!(&back, &eq);
        prop_assert_eq!(to_canonical_string(&back), text);
    }

    #[test]
    fn extra_spacing_and_parentheses_do_not_change_the_tree(rhs in expr()) {
        let eq = Equation::new("x", rhs.clone());
        let wrapped = format!("X=({})", rhs);
        prop_assert_eq!(parse_equation(&wrapped).unwrap(), eq);
    }

    #[test]
    fn rationals_print_and_parse_back(n in -100_000i64..100_000, d in 1i64..2_000) {
        let v = Rational::new(BigInt::from(n), BigInt::from(d));
        prop_assert_eq!(parse_rational(&format_rational(&v)).unwrap(), v);
    }

    #[test]
    fn parser_never_panics(s in "[x= 0-9.+*/()-]{0,24}") {
        let _ = parse_equation(&s);
    }
}

#[test]
fn division_by_zero_anywhere_is_an_error() {
    let zero = Expr::int(0);
    let bad = Expr::bin(Op::Add, Expr::int(1), Expr::bin(Op::Div, Expr::int(3), Expr::bin(Op::Sub, Expr::int(2), Expr::int(2))));
    assert!(evaluate(&bad).is_err());
    assert!(evaluate(&Expr::bin(Op::Div, Expr::int(5), zero)).is_err());
}

#[test]
fn exact_arithmetic_on_decimals() {
    let eq = parse_equation("x = 0.1 + 0.2").unwrap();
    assert_eq!(solve(&eq).unwrap(), Rational::new(BigInt::from(3), BigInt::from(10)));
    let eq = parse_equation("x = 1 / 3 * 3").unwrap();
    assert_eq!(solve(&eq).unwrap(), Rational::from_integer(BigInt::from(1)));
}
