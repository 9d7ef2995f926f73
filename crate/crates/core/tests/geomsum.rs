use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zetablocks::complex::{cabs_f64, cconvert, cexp, cinv, cmul, cscale};
use zetablocks::geomsum::{
    em_geom_deriv, geom_derivs_closed, geom_derivs_direct, geom_derivs_em, geom_sum,
    geom_sum_derivs, poly_exp_integral, y_laurent_derivs, GeomDerivRequest, Regime,
};
use zetablocks::{Context, Error, Real, Real128, Real256};

fn c<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::from_f64(re), T::from_f64(im))
}

/// Relative difference, absolute when `b = 0`.
fn rel<T: Real>(a: &Complex<T>, b: &Complex<T>) -> f64 {
    let d = cabs_f64(&(a.clone() - b));
    let m = cabs_f64(b);
    if m == 0.0 {
        d
    } else {
        d / m
    }
}

/// `Σ_{k<K} k^j e^{kz}` for every `j ≤ j_max`, by running products.
fn direct_oracle<T: Real>(z: &Complex<T>, k_count: u64, j_max: usize) -> Vec<Complex<T>> {
    let step = cexp(z);
    let mut e = c::<T>(1.0, 0.0);
    let mut out = vec![c::<T>(0.0, 0.0); j_max + 1];
    for k in 0..k_count {
        let kt = T::from_u64(k);
        let mut w = e.clone();
        for acc in out.iter_mut() {
            *acc += &w;
            w = cscale(&w, &kt);
        }
        e = cmul(&e, &step);
    }
    out
}

#[test]
fn geometric_sum_small_cases() {
    let ctx = Context::<Real128>::new();
    let v = geom_sum(&c::<Real128>(0.0, 0.0), 7, &ctx);
    assert_eq!((v.re.to_f64(), v.im.to_f64()), (7.0, 0.0));
    let v = geom_sum(&Complex::new(Real128::from_u64(0), Real128::pi()), 4, &ctx);
    assert!(cabs_f64(&v) < 1e-35);
    let ln2 = Real128::from_u64(2).ln();
    let v = geom_sum(&Complex::new(-ln2, Real128::from_u64(0)), 3, &ctx);
    assert!((v.re.to_f64() - 1.75).abs() < 1e-35 && v.im.to_f64().abs() < 1e-35);
    let z = c::<Real128>(-0.01, 0.0);
    let want = &direct_oracle(&z, 100, 0)[0];
    assert!(rel(&geom_sum(&z, 100, &ctx), want) < 1e-30);
    let req = GeomDerivRequest::new(z.clone(), 100, 0).unwrap();
    assert!(rel(&geom_sum_derivs(&req, &ctx).unscaled(0), want) < 1e-30);
}

#[test]
fn request_domain() {
    assert!(matches!(GeomDerivRequest::new(c::<f64>(0.1, 0.0), 5, 1), Err(Error::Domain(_))));
    assert!(matches!(GeomDerivRequest::new(c::<f64>(-0.6, 0.0), 5, 1), Err(Error::Domain(_))));
    assert!(matches!(GeomDerivRequest::new(c::<f64>(-0.1, 0.0), 0, 1), Err(Error::Parameter(_))));
    let r = GeomDerivRequest::new(c::<f64>(-0.1, 100.0), 5, 1).unwrap();
    assert!(r.z().im.abs() <= std::f64::consts::PI);
    assert!((r.z().im - (100.0 - 16.0 * std::f64::consts::TAU)).abs() < 1e-12);
}

#[test]
fn laurent_examples() {
    let ctx = Context::<Real128>::new();
    let z = Complex::new(Real128::from_u64(0), Real128::pi());
    let y = y_laurent_derivs(&z, 1, 60, &ctx).unwrap();
    assert!(cabs_f64(&(y[0].value.clone() - c::<Real128>(-0.5, 0.0))) < 1e-20);
    assert!(cabs_f64(&(y[1].value.clone() - c::<Real128>(0.25, 0.0))) < 1e-20);

    let z = c::<Real128>(0.01, 0.0);
    let y = y_laurent_derivs(&z, 0, 15, &ctx).unwrap();
    let want = Real128::from_u64(1) / z.re.exp_m1();
    assert!(((y[0].value.re.clone() - &want) / &want).abs().to_f64() < 1e-20);
    assert!(y[0].value.im.to_f64() == 0.0);

    assert!(matches!(y_laurent_derivs(&c::<f64>(0.0, 0.0), 1, 10, &Context::new()), Err(Error::Domain(_))));
    assert!(y_laurent_derivs(&c::<f64>(0.0, 6.3), 1, 10, &Context::new()).is_err());
}

/// `y^{(ℓ)}` as a polynomial in `y`, from `y' = -(y + y²)`.
fn y_derivative_polys(l_max: usize) -> Vec<Vec<i64>> {
    let mut polys = vec![vec![0, 1]];
    for _ in 0..l_max {
        let p = polys.last().unwrap();
        let mut dp = vec![0i64; p.len().saturating_sub(1)];
        for (i, &a) in p.iter().enumerate().skip(1) {
            dp[i - 1] = a * i as i64;
        }
        let mut next = vec![0i64; dp.len() + 2];
        for (i, &a) in dp.iter().enumerate() {
            next[i + 1] -= a;
            next[i + 2] -= a;
        }
        polys.push(next);
    }
    polys
}

#[test]
fn laurent_tail_bounds_are_honest() {
    let ctx = Context::<Real256>::new();
    let polys = y_derivative_polys(8);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..40 {
        let r = rng.gen_range(0.05..6.0);
        let th = rng.gen_range(0.0..std::f64::consts::TAU);
        let z = c::<Real256>(r * th.cos(), r * th.sin());
        let y = cinv(&(cexp(&z) - c::<Real256>(1.0, 0.0)));
        for n_terms in [2usize, 5, 10, 30] {
            let got = y_laurent_derivs(&z, 8, n_terms, &ctx).unwrap();
            for (ell, g) in got.iter().enumerate() {
                let mut want = c::<Real256>(0.0, 0.0);
                for &a in polys[ell].iter().rev() {
                    want = cmul(&want, &y);
                    want.re += Real256::from_i64(a);
                }
                let err = cabs_f64(&(g.value.clone() - &want));
                assert!(
                    err <= g.tail_bound * (1.0 + 1e-9) + 1e-60,
                    "|z|={r:.3} ℓ={ell} n={n_terms}: {err:e} > {:e}",
                    g.tail_bound
                );
            }
        }
    }
}

#[test]
fn derivative_examples() {
    let ctx = Context::<Real128>::new();
    let z = Complex::new(Real128::from_u64(0), Real128::pi());
    let req = GeomDerivRequest::new(z, 4, 1).unwrap();
    let d = geom_sum_derivs(&req, &ctx);
    assert!(cabs_f64(&(d.unscaled(1) - c::<Real128>(-2.0, 0.0))) < 1e-30);

    let z = c::<Real128>(-0.001, 0.5);
    let req = GeomDerivRequest::new(z.clone(), 10_000, 3).unwrap();
    let d = geom_sum_derivs(&req, &ctx);
    assert_ne!(d.regime, Regime::Direct);
    // The oracle's own running-product rounding must sit well below the certified bound.
    let want = direct_oracle(&cconvert::<Real128, Real256>(&z), 10_000, 3);
    for j in 0..=3 {
        let got = cconvert::<Real128, Real256>(&d.unscaled(j));
        assert!(rel(&got, &want[j]) <= 1e-10, "j = {j}");
        let err = cabs_f64(&(got - &want[j]));
        assert!(err <= d.unscaled_bound(j), "j={j} {:?}: {err:e} > {:e}", d.regime, d.unscaled_bound(j));
    }
}

#[test]
fn matches_direct_oracle_for_small_k() {
    let ctx = Context::<Real128>::new();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let zs: Vec<Complex<Real128>> = (0..50)
        .map(|_| c(rng.gen_range(-0.5..=0.0), rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)))
        .collect();
    let mut regimes = [0usize; 3];
    for k in 1..=300u64 {
        for z in &zs {
            let req = GeomDerivRequest::new(z.clone(), k, 8).unwrap();
            let d = geom_sum_derivs(&req, &ctx);
            regimes[d.regime.index()] += 1;
            let want = direct_oracle(z, k, 8);
            for (j, w) in want.iter().enumerate() {
                let err = rel(&d.unscaled(j), w);
                assert!(err <= 1e-11, "K={k} j={j} z={:?}: {err:e}", (z.re.to_f64(), z.im.to_f64()));
            }
        }
    }
    assert!(regimes.iter().all(|&n| n > 0), "{regimes:?}");
}

#[test]
fn derivative_matches_finite_difference() {
    let ctx = Context::<Real256>::new();
    let h = Real256::parse_decimal("1e-20").unwrap();
    for (re, im, k) in [(-0.01, 0.3, 50u64), (-0.2, 2.0, 1000), (-1e-4, 1e-3, 100_000), (0.0, -1.0, 7)] {
        let z = c::<Real256>(re, im);
        let zp = Complex::new(z.re.clone() + &h, z.im.clone());
        let zm = Complex::new(z.re.clone() - &h, z.im.clone());
        let fd = cscale(&(geom_sum(&zp, k, &ctx) - geom_sum(&zm, k, &ctx)), &(Real256::from_f64(0.5) / &h));
        let d = geom_sum_derivs(&GeomDerivRequest::new(z, k, 1).unwrap(), &ctx).unscaled(1);
        assert!(rel(&d, &fd) <= 1e-15, "z={re}+{im}i K={k}");
    }
}

#[test]
fn closed_form_agrees_with_direct() {
    let ctx = Context::<Real128>::new();
    let z = c::<Real128>(-0.3, 1.7);
    let req = GeomDerivRequest::new(z.clone(), 500, 6).unwrap();
    let cf = geom_derivs_closed(&req, &ctx).unwrap();
    let dr = geom_derivs_direct(&req, &ctx);
    assert_eq!(cf.regime, Regime::ClosedForm);
    assert!(cf.laurent_magnitude.is_some());
    for j in 0..=6 {
        let diff = cabs_f64(&(cf.scaled[j].clone() - &dr.scaled[j]));
        assert!(diff <= cf.bounds[j] + dr.bounds[j], "j = {j}");
    }
}

#[test]
fn euler_maclaurin_examples() {
    let ctx = Context::<Real128>::new();
    let (_, b) = em_geom_deriv(&c::<Real128>(-0.1, 0.1), 100, 0, 5, &ctx).unwrap();
    assert!((b - 4.1295e-6).abs() < 1e-9);
    assert!((b - 4.0 * 99.0 * std::f64::consts::TAU.powi(-10)).abs() < 1e-18);

    let z = c::<Real128>(-1e-5, 1e-5);
    let (v, b) = em_geom_deriv(&z, 10_000, 2, 10, &ctx).unwrap();
    let want = &direct_oracle(&z, 10_000, 2)[2];
    assert!(cabs_f64(&(v - want)) <= b);

    let z = c::<Real128>(-3e-5, -4e-5);
    let (v, _) = em_geom_deriv(&z, 10_000, 0, 10, &ctx).unwrap();
    let closed = cmul(
        &(cexp(&cscale(&z, &Real128::from_u64(10_000))) - c::<Real128>(1.0, 0.0)),
        &cinv(&(cexp(&z) - c::<Real128>(1.0, 0.0))),
    );
    assert!(rel(&v, &closed) <= 1e-12);

    assert!(matches!(em_geom_deriv(&z, 100, 0, 0, &ctx), Err(Error::Parameter(_))));
    let req = GeomDerivRequest::new(z, 100, 2).unwrap();
    assert!(matches!(geom_derivs_em(&req, Some(0), &ctx), Err(Error::Parameter(_))));
    let d = geom_derivs_em(&req, None, &ctx).unwrap();
    assert_eq!(d.regime, Regime::EulerMaclaurin);
    assert!(d.em_order.unwrap() >= 1);
}

/// `∫_0^X x^3 e^{zx} dx` from the antiderivative.
fn cubic_integral(z: &Complex<Real256>, x: u64) -> Complex<Real256> {
    let xr = Real256::from_u64(x);
    let iz = cinv(z);
    let iz2 = cmul(&iz, &iz);
    let iz3 = cmul(&iz2, &iz);
    let iz4 = cmul(&iz3, &iz);
    let x2 = xr.clone() * &xr;
    let x3 = x2.clone() * &xr;
    let poly = cscale(&iz, &x3) - cscale(&iz2, &(x2 * Real256::from_u64(3)))
        + cscale(&iz3, &(xr.clone() * Real256::from_u64(6)))
        - cscale(&iz4, &Real256::from_u64(6));
    cmul(&cexp(&cscale(z, &xr)), &poly) + cscale(&iz4, &Real256::from_u64(6))
}

#[test]
fn polynomial_exponential_integral() {
    let ctx = Context::<Real128>::new();
    let (v, b) = poly_exp_integral(&c::<Real128>(0.0, 0.0), 4, 11, 5, &ctx).unwrap();
    assert!((v.re.to_f64() - 20_000.0).abs() < 1e-25 && v.im.to_f64() == 0.0);
    assert!(b >= 0.0);

    let z = c::<Real128>(-2e-3, 1e-3);
    let (v, _) = poly_exp_integral(&z, 0, 1000, 4, &ctx).unwrap();
    let want = cmul(&(cexp(&cscale(&z, &Real128::from_u64(999))) - c::<Real128>(1.0, 0.0)), &cinv(&z));
    assert!(rel(&v, &want) <= 1e-14);

    let ctx = Context::<Real256>::new();
    let z = c::<Real256>(-1e-4, 0.0);
    let (v, b) = poly_exp_integral(&z, 3, 10_000, 8, &ctx).unwrap();
    let want = cubic_integral(&z, 9_999);
    assert!(rel(&v, &want) <= 1e-12);
    assert!(cabs_f64(&(v - &want)) <= b.max(1e-60));

    assert!(poly_exp_integral(&z, 3, 10_000, 3, &ctx).is_err());
}
