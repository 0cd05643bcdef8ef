//! Shared test helpers.
#![allow(dead_code)]

use astro_float::{BigFloat, Consts, RoundingMode};
use estraus::bounds::{BinOp, BoundExpr, Constants, Func};
use proptest::prelude::*;

pub fn constants() -> Constants {
    [("c".to_string(), 1.5), ("k_2".to_string(), 0.25)]
        .into_iter()
        .collect()
}

/// Well-formed expressions whose literals survive printing.
pub fn arb_expr() -> impl Strategy<Value = BoundExpr> {
    let leaf = prop_oneof![
        Just(BoundExpr::Var),
        (0u32..1000).prop_map(|v| BoundExpr::Num(v as f64)),
        (0u32..4000).prop_map(|v| BoundExpr::Num(v as f64 / 64.0)),
        prop_oneof![Just("c"), Just("k_2")].prop_map(|name| BoundExpr::Const {
            name: name.to_string(),
            value: constants()[name],
        }),
    ];
    leaf.prop_recursive(5, 40, 2, |inner| {
        prop_oneof![
            (
                prop_oneof![
                    Just(BinOp::Add),
                    Just(BinOp::Sub),
                    Just(BinOp::Mul),
                    Just(BinOp::Div)
                ],
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(op, l, r)| BoundExpr::binary(op, l, r)),
            (inner.clone(), 0u32..40).prop_map(|(b, e)| BoundExpr::pow(b, e as f64 / 4.0)),
            (
                prop_oneof![
                    Just(Func::Log),
                    Just(Func::LogLog),
                    Just(Func::Exp),
                    Just(Func::Sqrt)
                ],
                inner
            )
                .prop_map(|(f, a)| BoundExpr::call(f, a)),
        ]
    })
}

pub const PREC: usize = 256;
pub const RM: RoundingMode = RoundingMode::ToEven;

pub struct Oracle {
    cc: Consts,
}

impl Oracle {
    pub fn new() -> Self {
        Self {
            cc: Consts::new().unwrap(),
        }
    }

    fn ln(&mut self, x: &BigFloat) -> BigFloat {
        x.ln(PREC, RM, &mut self.cc)
    }

    /// (N, ln N, ln ln N).
    fn logs(&mut self, n: u64) -> (BigFloat, BigFloat, BigFloat) {
        let x = BigFloat::from_u64(n, PREC);
        let l = self.ln(&x);
        let ll = self.ln(&l);
        (x, l, ll)
    }

    pub fn jia(&mut self, n: u64) -> BigFloat {
        let (x, l, ll) = self.logs(n);
        x.mul(&l.powi(5, PREC, RM), PREC, RM)
            .mul(&ll.powi(2, PREC, RM), PREC, RM)
    }

    pub fn paper_g(&mut self, n: u64) -> BigFloat {
        let (_, l, _) = self.logs(n);
        self.jia(n).sub(&l, PREC, RM)
    }

    pub fn tao_upper(&mut self, n: u64) -> BigFloat {
        let (x, l, ll) = self.logs(n);
        x.mul(&l.powi(2, PREC, RM), PREC, RM).mul(&ll, PREC, RM)
    }

    pub fn tao_type_i(&mut self, n: u64, c: f64) -> BigFloat {
        let (x, l, ll) = self.logs(n);
        let arg = BigFloat::from_f64(c, PREC)
            .mul(&l, PREC, RM)
            .div(&ll, PREC, RM);
        x.mul(&arg.exp(PREC, RM, &mut self.cc), PREC, RM)
    }
}

/// `|got - want| / |want|`, rendered for messages.
pub fn relative_error(got: f64, want: &BigFloat) -> BigFloat {
    BigFloat::from_f64(got, PREC)
        .sub(want, PREC, RM)
        .div(want, PREC, RM)
        .abs()
}

pub fn within(got: f64, want: &BigFloat, tol: f64) -> bool {
    relative_error(got, want)
        .cmp(&BigFloat::from_f64(tol, PREC))
        .is_some_and(|c| c < 0)
}

pub fn assert_close(name: &str, n: u64, got: f64, want: &BigFloat) {
    assert!(
        within(got, want, 1e-12),
        "{name}({n}) = {got}, reference {want}, relative error {}",
        relative_error(got, want)
    );
}
