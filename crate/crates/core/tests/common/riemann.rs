//! Exact solution of the Riemann problem for the ideal-gas Euler equations
//! (pressure-function iteration, Toro ch. 4). Used only as a test oracle.

#[derive(Debug, Clone, Copy)]
pub struct Primitive {
    pub rho: f64,
    pub u: f64,
    pub p: f64,
}

pub struct ExactRiemann {
    gamma: f64,
    l: Primitive,
    r: Primitive,
    p_star: f64,
    u_star: f64,
}

impl ExactRiemann {
    pub fn new(l: Primitive, r: Primitive, gamma: f64) -> Self {
        let mut s = Self {
            gamma,
            l,
            r,
            p_star: 0.0,
            u_star: 0.0,
        };
        let cl = s.sound(&l);
        let cr = s.sound(&r);
        assert!(2.0 / (gamma - 1.0) * (cl + cr) > r.u - l.u, "vacuum generated");
        // two-rarefaction guess, then Newton
        let z = (gamma - 1.0) / (2.0 * gamma);
        let mut p =
            ((cl + cr - 0.5 * (gamma - 1.0) * (r.u - l.u)) / (cl / l.p.powf(z) + cr / r.p.powf(z))).powf(1.0 / z);
        for _ in 0..100 {
            let (fl, dl) = s.f(p, &l);
            let (fr, dr) = s.f(p, &r);
            let next = (p - (fl + fr + r.u - l.u) / (dl + dr)).max(1e-14);
            let done = 2.0 * (next - p).abs() / (next + p) < 1e-15;
            p = next;
            if done {
                break;
            }
        }
        s.p_star = p;
        s.u_star = 0.5 * (l.u + r.u) + 0.5 * (s.f(p, &r).0 - s.f(p, &l).0);
        s
    }

    fn sound(&self, s: &Primitive) -> f64 {
        (self.gamma * s.p / s.rho).sqrt()
    }

    fn f(&self, p: f64, k: &Primitive) -> (f64, f64) {
        let g = self.gamma;
        let c = self.sound(k);
        if p > k.p {
            let a = 2.0 / ((g + 1.0) * k.rho);
            let b = (g - 1.0) / (g + 1.0) * k.p;
            let q = (a / (p + b)).sqrt();
            ((p - k.p) * q, q * (1.0 - 0.5 * (p - k.p) / (b + p)))
        } else {
            let e = (g - 1.0) / (2.0 * g);
            let val = 2.0 * c / (g - 1.0) * ((p / k.p).powf(e) - 1.0);
            let der = (p / k.p).powf(-(g + 1.0) / (2.0 * g)) / (k.rho * c);
            (val, der)
        }
    }

    pub fn p_star(&self) -> f64 {
        self.p_star
    }

    pub fn u_star(&self) -> f64 {
        self.u_star
    }

    /// Solution at similarity coordinate `xi = (x - x0) / t`.
    pub fn sample(&self, xi: f64) -> Primitive {
        let g = self.gamma;
        let (ps, us) = (self.p_star, self.u_star);
        if xi <= us {
            let k = self.l;
            let c = self.sound(&k);
            if ps > k.p {
                let sl = k.u - c * ((g + 1.0) / (2.0 * g) * ps / k.p + (g - 1.0) / (2.0 * g)).sqrt();
                if xi <= sl {
                    k
                } else {
                    let r = ps / k.p;
                    let gg = (g - 1.0) / (g + 1.0);
                    Primitive {
                        rho: k.rho * (r + gg) / (gg * r + 1.0),
                        u: us,
                        p: ps,
                    }
                }
            } else {
                let head = k.u - c;
                let cs = c * (ps / k.p).powf((g - 1.0) / (2.0 * g));
                let tail = us - cs;
                if xi <= head {
                    k
                } else if xi >= tail {
                    Primitive {
                        rho: k.rho * (ps / k.p).powf(1.0 / g),
                        u: us,
                        p: ps,
                    }
                } else {
                    let f = 2.0 / (g + 1.0) + (g - 1.0) / ((g + 1.0) * c) * (k.u - xi);
                    Primitive {
                        rho: k.rho * f.powf(2.0 / (g - 1.0)),
                        u: 2.0 / (g + 1.0) * (c + 0.5 * (g - 1.0) * k.u + xi),
                        p: k.p * f.powf(2.0 * g / (g - 1.0)),
                    }
                }
            }
        } else {
            let k = self.r;
            let c = self.sound(&k);
            if ps > k.p {
                let sr = k.u + c * ((g + 1.0) / (2.0 * g) * ps / k.p + (g - 1.0) / (2.0 * g)).sqrt();
                if xi >= sr {
                    k
                } else {
                    let r = ps / k.p;
                    let gg = (g - 1.0) / (g + 1.0);
                    Primitive {
                        rho: k.rho * (r + gg) / (gg * r + 1.0),
                        u: us,
                        p: ps,
                    }
                }
            } else {
                let head = k.u + c;
                let cs = c * (ps / k.p).powf((g - 1.0) / (2.0 * g));
                let tail = us + cs;
                if xi >= head {
                    k
                } else if xi <= tail {
                    Primitive {
                        rho: k.rho * (ps / k.p).powf(1.0 / g),
                        u: us,
                        p: ps,
                    }
                } else {
                    let f = 2.0 / (g + 1.0) - (g - 1.0) / ((g + 1.0) * c) * (k.u - xi);
                    Primitive {
                        rho: k.rho * f.powf(2.0 / (g - 1.0)),
                        u: 2.0 / (g + 1.0) * (-c + 0.5 * (g - 1.0) * k.u + xi),
                        p: k.p * f.powf(2.0 * g / (g - 1.0)),
                    }
                }
            }
        }
    }

    /// Cell averages of the density on `n` cells of `[x_min, x_max]` at time
    /// `t` with the discontinuity initially at `x0`.
    pub fn density_averages(&self, x_min: f64, x_max: f64, n: usize, x0: f64, t: f64) -> Vec<f64> {
        let dx = (x_max - x_min) / n as f64;
        let sub = 32;
        (0..n)
            .map(|i| {
                (0..sub)
                    .map(|k| {
                        let x = x_min + (i as f64 + (k as f64 + 0.5) / sub as f64) * dx;
                        self.sample((x - x0) / t).rho
                    })
                    .sum::<f64>()
                    / sub as f64
            })
            .collect()
    }
}
