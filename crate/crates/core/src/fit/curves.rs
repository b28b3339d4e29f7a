//! The five candidate frequency -> performance forms.
//!
//! * P1 `a / (1 + ((F - b) / c)^2) + d`
//! * P2 `a1 exp(-(F - b1)^2 / 2c1^2) + a2 exp(-(F - b2)^2 / 2c2^2)`
//! * P3 `a F^b exp(-c F)`
//! * P4 `(a / F) exp(-(ln F - b)^2 / 2c^2)`
//! * P5 `a exp(-b F) + c / (1 + exp(-k (F - F0)))`

use alloc::vec::Vec;
use core::fmt;

use libm::{exp, log, pow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum CurveForm {
    P1,
    P2,
    P3,
    P4,
    P5,
}

impl CurveForm {
    pub const ALL: [CurveForm; 5] = [CurveForm::P1, CurveForm::P2, CurveForm::P3, CurveForm::P4, CurveForm::P5];

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            CurveForm::P1 => &["a", "b", "c", "d"],
            CurveForm::P2 => &["a1", "b1", "c1", "a2", "b2", "c2"],
            CurveForm::P3 => &["a", "b", "c"],
            CurveForm::P4 => &["a", "b", "c"],
            CurveForm::P5 => &["a", "b", "c", "k", "F0"],
        }
    }

    pub fn param_count(self) -> usize {
        self.param_names().len()
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "p1" | "P1" => Some(CurveForm::P1),
            "p2" | "P2" => Some(CurveForm::P2),
            "p3" | "P3" => Some(CurveForm::P3),
            "p4" | "P4" => Some(CurveForm::P4),
            "p5" | "P5" => Some(CurveForm::P5),
            _ => None,
        }
    }
}

impl fmt::Display for CurveForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CurveForm::P1 => "p1",
            CurveForm::P2 => "p2",
            CurveForm::P3 => "p3",
            CurveForm::P4 => "p4",
            CurveForm::P5 => "p5",
        };
        f.write_str(s)
    }
}

/// A form together with a parameter vector in original units.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CurveModel {
    pub form: CurveForm,
    pub params: Vec<f64>,
}

/// Logistic function without overflow for large |x|.
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + exp(-x))
    } else {
        let e = exp(x);
        e / (1.0 + e)
    }
}

impl CurveModel {
    pub fn new(form: CurveForm, params: Vec<f64>) -> Self {
        assert_eq!(params.len(), form.param_count(), "wrong parameter count for {form}");
        Self { form, params }
    }

    pub fn eval(&self, f: f64) -> f64 {
        eval_form(self.form, &self.params, f)
    }

    /// Value and gradient with respect to the parameters at frequency `f`.
    pub fn eval_grad(&self, f: f64, grad: &mut [f64]) -> f64 {
        eval_grad_form(self.form, &self.params, f, grad)
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }
}

pub fn eval_form(form: CurveForm, p: &[f64], f: f64) -> f64 {
    match form {
        CurveForm::P1 => {
            let z = (f - p[1]) / p[2];
            p[0] / (1.0 + z * z) + p[3]
        }
        CurveForm::P2 => {
            let g = |a: f64, b: f64, c: f64| a * exp(-(f - b) * (f - b) / (2.0 * c * c));
            g(p[0], p[1], p[2]) + g(p[3], p[4], p[5])
        }
        CurveForm::P3 => p[0] * pow(f, p[1]) * exp(-p[2] * f),
        CurveForm::P4 => {
            let l = log(f) - p[1];
            p[0] / f * exp(-l * l / (2.0 * p[2] * p[2]))
        }
        CurveForm::P5 => p[0] * exp(-p[1] * f) + p[2] * sigmoid(p[3] * (f - p[4])),
    }
}

pub fn eval_grad_form(form: CurveForm, p: &[f64], f: f64, g: &mut [f64]) -> f64 {
    match form {
        CurveForm::P1 => {
            let (a, b, c) = (p[0], p[1], p[2]);
            let z = (f - b) / c;
            let q = 1.0 + z * z;
            g[0] = 1.0 / q;
            g[1] = a * 2.0 * z / (c * q * q);
            g[2] = a * 2.0 * z * z / (c * q * q);
            g[3] = 1.0;
            a / q + p[3]
        }
        CurveForm::P2 => {
            let mut v = 0.0;
            for j in 0..2 {
                let (a, b, c) = (p[3 * j], p[3 * j + 1], p[3 * j + 2]);
                let d = f - b;
                let e = exp(-d * d / (2.0 * c * c));
                g[3 * j] = e;
                g[3 * j + 1] = a * e * d / (c * c);
                g[3 * j + 2] = a * e * d * d / (c * c * c);
                v += a * e;
            }
            v
        }
        CurveForm::P3 => {
            let base = pow(f, p[1]) * exp(-p[2] * f);
            let v = p[0] * base;
            g[0] = base;
            g[1] = v * log(f);
            g[2] = -f * v;
            v
        }
        CurveForm::P4 => {
            let (a, b, c) = (p[0], p[1], p[2]);
            let l = log(f) - b;
            let e = exp(-l * l / (2.0 * c * c)) / f;
            let v = a * e;
            g[0] = e;
            g[1] = v * l / (c * c);
            g[2] = v * l * l / (c * c * c);
            v
        }
        CurveForm::P5 => {
            let (a, b, c, k, f0) = (p[0], p[1], p[2], p[3], p[4]);
            let e = exp(-b * f);
            let x = k * (f - f0);
            let s = sigmoid(x);
            let ds = s * sigmoid(-x);
            g[0] = e;
            g[1] = -a * f * e;
            g[2] = s;
            g[3] = c * ds * (f - f0);
            g[4] = -c * ds * k;
            a * e + c * s
        }
    }
}
