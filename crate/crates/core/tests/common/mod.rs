// Exact rational recurrences in unscaled form.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use qrm2_core::{ModelParams, Parity};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn nat(m: usize) -> Q {
    Q::from_integer(BigInt::from(m))
}

pub fn f(x: &Q) -> f64 {
    x.to_f64().unwrap()
}

pub struct Exact {
    pub d1: Q,
    pub d2: Q,
    pub g: Q,
    pub gp: Q,
}

// Δ1 = 7/10, Δ2 = 2/5, g1 = 4/5, g2 = 2/5.
pub fn fig1() -> (ModelParams, Exact) {
    (
        ModelParams::new(0.7, 0.4, 0.8, 0.4).unwrap(),
        Exact {
            d1: q(7, 10),
            d2: q(2, 5),
            g: q(6, 5),
            gp: q(2, 5),
        },
    )
}

// Δ1 = 7/10, Δ2 = 2/5, g1 = g2 = 2/5.
pub fn fig2() -> (ModelParams, Exact) {
    (
        ModelParams::new(0.7, 0.4, 0.4, 0.4).unwrap(),
        Exact {
            d1: q(7, 10),
            d2: q(2, 5),
            g: q(4, 5),
            gp: Q::zero(),
        },
    )
}

pub fn bracket(x: &Exact, parity: Parity, m: usize) -> Q {
    let plus = (parity == Parity::Even) == (m % 2 == 0);
    if plus {
        &x.d2 + &x.d1
    } else {
        &x.d2 - &x.d1
    }
}

pub fn prev(c: &[Q], m: usize) -> Q {
    if m == 0 {
        Q::zero()
    } else {
        c[m - 1].clone()
    }
}

// Row equations of the parity block, solved for the next coefficient.
pub fn d_chain(x: &Exact, parity: Parity, e: &Q, a0: Q, b0: Q, n: usize) -> (Vec<Q>, Vec<Q>) {
    let (mut a, mut b) = (vec![a0], vec![b0]);
    for m in 0..n {
        let c = bracket(x, parity, m);
        let me = nat(m) - e;
        let an = (&c * &b[m] - &me * &a[m] - &x.g * prev(&a, m)) / (&x.g * nat(m + 1));
        let bn = (&c * &a[m] - &me * &b[m] - &x.gp * prev(&b, m)) / (&x.gp * nat(m + 1));
        a.push(an);
        b.push(bn);
    }
    (a, b)
}

pub fn a_chain(x: &Exact, e: &Q, init: [Q; 3], n: usize) -> [Vec<Q>; 4] {
    let (g, gp) = (&x.g, &x.gp);
    let g2 = g * g;
    let ggp2 = q(2, 1) * g * gp;
    let [v0, w0, z0] = init;
    let (mut u, mut v, mut w, mut z) = (vec![], vec![v0], vec![w0], vec![z0]);
    for m in 0..=n {
        let me = nat(m) - e;
        u.push((&x.d2 * &v[m] + &x.d1 * &w[m]) / (&me - &g2));
        if m == n {
            break;
        }
        let k = nat(m + 1);
        let vn = -((&x.d1 * &z[m] + &x.d2 * &u[m] - (&me + &g2 - &ggp2) * &v[m]) / (g - gp) + prev(&v, m)) / &k;
        let wn = -((&x.d2 * &z[m] + &x.d1 * &u[m] - (&me + &g2 + &ggp2) * &w[m]) / (g + gp) + prev(&w, m)) / &k;
        let zn = -((&x.d1 * &v[m] + &x.d2 * &w[m] - (&me + q(3, 1) * &g2) * &z[m]) / (q(2, 1) * g) + prev(&z, m)) / &k;
        v.push(vn);
        w.push(wn);
        z.push(zn);
    }
    [u, v, w, z]
}

pub fn b_chain(x: &Exact, e: &Q, init: [Q; 3], n: usize) -> [Vec<Q>; 4] {
    let (g, gp) = (&x.g, &x.gp);
    let gp2 = gp * gp;
    let ggp2 = q(2, 1) * g * gp;
    let [u0, w0, z0] = init;
    let (mut u, mut v, mut w, mut z) = (vec![u0], vec![], vec![w0], vec![z0]);
    for m in 0..=n {
        let me = nat(m) - e;
        v.push((&x.d1 * &z[m] + &x.d2 * &u[m]) / (&me - &gp2));
        if m == n {
            break;
        }
        let k = nat(m + 1);
        let un = -((&x.d2 * &v[m] + &x.d1 * &w[m] - (&me + &gp2 - &ggp2) * &u[m]) / (gp - g) + prev(&u, m)) / &k;
        let wn = -((&x.d2 * &z[m] + &x.d1 * &u[m] - (&me + q(3, 1) * &gp2) * &w[m]) / (q(2, 1) * gp) + prev(&w, m)) / &k;
        let zn = -((&x.d1 * &v[m] + &x.d2 * &w[m] - (&me + &gp2 + &ggp2) * &z[m]) / (g + gp) + prev(&z, m)) / &k;
        u.push(un);
        w.push(wn);
        z.push(zn);
    }
    [u, v, w, z]
}

pub fn eq_chain(x: &Exact, e: &Q, init: [Q; 3], n: usize) -> [Vec<Q>; 4] {
    let g = &x.g;
    let g2 = g * g;
    let cross = q(2, 1) * &x.d1 * &x.d2;
    let norm = &x.d1 * &x.d1 + &x.d2 * &x.d2;
    let [y0, x0, z0] = init;
    let (mut u, mut y, mut xs, mut z) = (vec![], vec![y0], vec![x0], vec![z0]);
    for m in 0..=n {
        let me = nat(m) - e;
        u.push(&y[m] / (&me - &g2));
        if m == n {
            break;
        }
        let k = nat(m + 1);
        let yn = -((&cross * &z[m] + &norm * &u[m] - (&me + &g2) * &y[m]) / g + prev(&y, m)) / &k;
        let xn = -((&norm * &z[m] + &cross * &u[m] - (&me + &g2) * &xs[m]) / g + prev(&xs, m)) / &k;
        let zn = -((&xs[m] - (&me + q(3, 1) * &g2) * &z[m]) / (q(2, 1) * g) + prev(&z, m)) / &k;
        y.push(yn);
        xs.push(xn);
        z.push(zn);
    }
    [u, y, xs, z]
}

pub fn three_term(x: &Exact, parity: Parity, e: &Q, n: usize) -> (Vec<Q>, Vec<Q>) {
    let b_of = |m: usize, a: &Q| -> Q {
        let c = bracket(x, parity, m);
        if c.is_zero() {
            Q::zero()
        } else {
            c * a / (nat(m) - e)
        }
    };
    // b0 = 1 start.
    let c0 = bracket(x, parity, 0);
    let (mut a, mut b) = (vec![-e / &c0], vec![Q::one()]);
    for m in 0..n {
        let c = bracket(x, parity, m);
        let an = (&c * &b[m] - (nat(m) - e) * &a[m] - &x.g * prev(&a, m)) / (&x.g * nat(m + 1));
        b.push(b_of(m + 1, &an));
        a.push(an);
    }
    (a, b)
}

/// Largest `|scaled − exact·s^n|` relative to the largest `|exact·s^n|`.
pub fn rel_dev(scaled: &[f64], exact: &[Q], s: f64) -> f64 {
    let ex: Vec<f64> = exact.iter().enumerate().map(|(n, c)| f(c) * s.powi(n as i32)).collect();
    let peak = ex.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let worst = scaled.iter().zip(&ex).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if peak == 0.0 {
        worst
    } else {
        worst / peak
    }
}
