//! Named contractions entering the Pontrjagin (`T′`, `S′`) and Chern (`U′`, `V′`)
//! tensors of a 4-dimensional almost Hermitian structure.
//!
//! Index positions follow the displayed formulas literally; every contraction
//! joins a lower with an upper index, raising or lowering with the metric.
//! `J_ij = J_i^a g_aj`, `J^ij = g^ia J_a^j`, `∇J` carries the derivative slot
//! last and `∇_b ∇_a X` is the second covariant derivative with `a` applied first.

use crate::curvature::{covariant_derivative, star_ricci_jets, MetricGeometry};
use crate::error::Result;
use crate::jets::{einsum, Jet, JetTensor};

/// Jets of all building blocks at one point.
pub struct HermitianJets {
    pub geo: MetricGeometry,
    /// `J_a^b`
    pub j: JetTensor,
    /// `J_ab`
    pub j_dd: JetTensor,
    /// `J^ab`
    pub j_uu: JetTensor,
    /// `ρ*_ab`, `ρ*^ab`, `ρ*^a_b`, `ρ*_a^b`
    pub rs: JetTensor,
    pub rs_uu: JetTensor,
    pub rs_ud: JetTensor,
    pub rs_du: JetTensor,
    pub tau_star: Jet,
    /// `∇_w J_a^b` as `[a, b, w]`
    pub dj: JetTensor,
    /// `∇^w J_a^b` as `[a, b, w]`
    pub dj_raised: JetTensor,
    /// `∇_c J^ab` as `[a, b, c]`
    pub dj_uu: JetTensor,
    /// `K_wc = (∇_w J_a^b)(∇_c J_u^a) J_b^u`
    pub k: JetTensor,
    /// `κ = K_cu J^cu`
    pub kappa: Jet,
    /// `R^uv_j^b`
    pub r_uudu: JetTensor,
    /// `R^k_ab^i`
    pub r_uddu: JetTensor,
    /// `R^k_cab`
    pub r_uddd: JetTensor,
}

impl HermitianJets {
    /// From metric jets (order `K ≥ 2`) and structure jets; building blocks
    /// carry order `K − 2`.
    pub fn new(g: JetTensor, j: JetTensor) -> Result<Self> {
        let geo = MetricGeometry::from_jets(g)?;
        let ord = geo.r.order();
        let gi = geo.ginv.truncate(ord);
        let g = geo.g.truncate(ord);
        let dj = covariant_derivative(&j, &geo.gamma)?.truncate(ord);
        let j = j.truncate(ord);
        let j_dd = einsum("ac,cb->ab", &[&j, &g]);
        let j_uu = einsum("ac,cb->ab", &[&gi, &j]);
        let (rs, _) = star_ricci_jets(&geo, &j);
        let rs_uu = einsum("ac,bd,cd->ab", &[&gi, &gi, &rs]);
        let rs_ud = einsum("ac,cb->ab", &[&gi, &rs]);
        let rs_du = einsum("ac,cb->ab", &[&rs, &gi]);
        let tau_star = einsum("ab,ab->", &[&rs, &gi]).as_scalar();
        let dj_raised = einsum("abx,xw->abw", &[&dj, &gi]);
        let dj_uu = einsum("xa,xbc->abc", &[&gi, &dj]);
        let k = einsum("abw,uac,bu->wc", &[&dj, &dj, &j]);
        let kappa = einsum("cu,cu->", &[&k, &j_uu]).as_scalar();
        let r_up = geo.r_up.truncate(ord);
        let r_uudu = einsum("xyjb,xu,yv->uvjb", &[&r_up, &gi, &gi]);
        let r_uddu = einsum("xk,xabi->kabi", &[&gi, &r_up]);
        let r_uddd = einsum("xk,xcab->kcab", &[&gi, &geo.r.truncate(ord)]);
        Ok(Self {
            geo, j, j_dd, j_uu, rs, rs_uu, rs_ud, rs_du, tau_star, dj, dj_raised, dj_uu, k, kappa, r_uudu, r_uddu, r_uddd,
        })
    }

    pub fn g(&self) -> JetTensor {
        self.geo.g.truncate(self.j.order())
    }

    pub fn ginv(&self) -> JetTensor {
        self.geo.ginv.truncate(self.j.order())
    }

    fn r_up(&self) -> JetTensor {
        self.geo.r_up.truncate(self.j.order())
    }

    fn r(&self) -> JetTensor {
        self.geo.r.truncate(self.j.order())
    }

    fn nabla(&self, t: &JetTensor) -> Result<JetTensor> {
        covariant_derivative(t, &self.geo.gamma)
    }

    fn nabla2(&self, t: &JetTensor) -> Result<JetTensor> {
        self.nabla(&self.nabla(t)?)
    }
}

/// One named contraction with free indices `ij` (lower) or `ij`/`pq` (upper).
pub struct Term {
    pub name: &'static str,
    pub coefficient: f64,
    pub value: JetTensor,
}

fn term(name: &'static str, coefficient: f64, value: JetTensor) -> Term {
    Term { name, coefficient, value }
}

/// Terms of `T′_ij`. The display leaves the sign between the bracket `2(…)`
/// and the following term `4 J_j^a J^ub R_abk^l R_iul^k` unmarked; it is
/// passed in as `join`.
pub fn t_prime_terms(h: &HermitianJets, join: f64) -> Result<Vec<Term>> {
    let (rs, j, jd, ju) = (&h.rs, &h.j, &h.j_dd, &h.j_uu);
    let ss = einsum("ab,ab->", &[&h.rs_uu, rs]).as_scalar();
    let x1 = einsum("ac,ib,cj->abij", &[&h.rs_uu, j, jd]);
    let x2 = einsum("ua,vi,uvjb->abij", &[j, jd, &h.r_uudu]);
    let q = einsum("ua,vb,abkl,uvlk->", &[ju, ju, &h.r_up(), &h.r_up()]).as_scalar();
    Ok(vec![
        term("rs^a_j rs_ai", 2.0, einsum("aj,ai->ij", &[&h.rs_ud, rs])),
        term("rs_ja rs_i^a", -2.0, einsum("ja,ia->ij", &[rs, &h.rs_du])),
        term("rs^ab R_auvi J_b^u J_j^v", 2.0, einsum("ab,auvi,bu,jv->ij", &[&h.rs_uu, &h.r(), j, j])),
        term("∇_b∇_a(rs^ac J_i^b J_cj)", 4.0, einsum("abijab->ij", &[&h.nabla2(&x1)?])),
        term("rs^ab rs_ab g_ij", 1.0, h.g().mul_scalar(&ss)),
        term("J_j^a J^ub R_abk^l R_iul^k", 4.0 * join, einsum("ja,ub,abkl,iulk->ij", &[j, ju, &h.r_up(), &h.r_up()])),
        term("∇_b∇_a(J_u^a J_vi R^uv_j^b)", 4.0, einsum("abijab->ij", &[&h.nabla2(&x2)?])),
        term("J^ua J^vb R_abk^l R_uvl^k g_ij", 0.5, h.g().mul_scalar(&q)),
    ])
}

/// Terms of `S′_ij`.
pub fn s_prime_terms(h: &HermitianJets) -> Vec<Term> {
    let (rs, j, jd, ju) = (&h.rs, &h.j, &h.j_dd, &h.j_uu);
    vec![
        term("rs^ab J_bj rs_ai", 4.0, einsum("ab,bj,ai->ij", &[&h.rs_uu, jd, rs])),
        term("rs^ab J_b^c J_i^u J_j^v R_acuv", -2.0, einsum("ab,bc,iu,jv,acuv->ij", &[&h.rs_uu, j, j, j, &h.r()])),
        term("J^ua R_jak^l R_iul^k", -2.0, einsum("ua,jakl,iulk->ij", &[ju, &h.r_up(), &h.r_up()])),
    ]
}

/// Terms of `U′^ij`.
pub fn u_prime_terms(h: &HermitianJets) -> Result<Vec<Term>> {
    let (j, ju, gi, k) = (&h.j, &h.j_uu, &h.ginv(), &h.k);
    let ts = &h.tau_star;
    let kappa = &h.kappa;
    let k_raised_second = einsum("wc,cj->wj", &[k, gi]);
    let k_raised_first = einsum("kw,wd->kd", &[gi, k]);
    let x3 = einsum("cv,vi,juc->iju", &[ju, &h.rs_du, &h.dj_uu]);
    let x5 = einsum("dj,si,kc,kd->csij", &[ju, ju, j, &k_raised_first]);
    let x9 = einsum("ik,jl->ijkl", &[ju, ju]).mul_scalar(kappa);
    let x10 = einsum("jcu,iu->ijc", &[&h.dj_uu, ju]).mul_scalar(ts);
    let x15 = einsum("kl,ai,kj->laij", &[&h.rs, ju, ju]);
    let x18 = einsum("ia,jb->ijab", &[ju, ju]).mul_scalar(ts);
    let d15 = einsum("laijpa->lijp", &[&h.nabla2(&x15)?]);
    let ss = einsum("ab,ba->", &[&h.rs_uu, &h.rs]).as_scalar();
    let jrk = einsum("cv,vd,dc->", &[ju, &h.rs_du, k]).as_scalar();
    Ok(vec![
        term("J^iv rs_v^w K_w^j", 1.0, einsum("iv,vw,wj->ij", &[ju, &h.rs_du, &k_raised_second])),
        term("J^wi rs^jc K_cw", 1.0, einsum("wi,jc,cw->ij", &[ju, &h.rs_uu, k])),
        term("∇_u(J^cv rs_v^i ∇_c J^ju)", 4.0, einsum("ijuu->ij", &[&h.nabla(&x3)?])),
        term("J^cv R_vws^i J^dw J^sj K_dc", 0.5, einsum("cv,vwsi,dw,sj,dc->ij", &[ju, &h.r_up(), ju, ju, k])),
        term("∇_s∇_c(J^dj J^si J_k^c K^k_d)", -1.0, einsum("csijcs->ij", &[&h.nabla2(&x5)?])),
        term("J^cv rs_v^d (∇_d J_a^i)(∇_c J^jw) J_w^a", -3.0, einsum("cv,vd,aid,jwc,wa->ij", &[ju, &h.rs_du, &h.dj, &h.dj_uu, j])),
        term("J^cv rs_v^d K_dc g^ij", -0.5, gi.mul_scalar(&jrk)),
        term("rs^ij κ", -0.5, h.rs_uu.mul_scalar(kappa)),
        term("∇_l∇_k(J^ik J^jl κ)", 0.5, einsum("ijklkl->ij", &[&h.nabla2(&x9)?])),
        term("∇_c(τ* (∇_u J^jc) J^iu)", 2.0, einsum("ijcc->ij", &[&h.nabla(&x10)?])),
        term("τ* (∇_c J^jb)(∇_u J_v^i) J_b^v J^cu", 1.5, einsum("jbc,viu,bv,cu->ij", &[&h.dj_uu, &h.dj, j, ju]).mul_scalar(ts)),
        term("τ* K^j_u J^iu", 1.0, einsum("ju,iu->ij", &[&k_raised_first, ju]).mul_scalar(ts)),
        term("τ* κ g^ij", -0.25, gi.mul_scalar(&(ts * kappa))),
        term("rs_lk R^k_ab^i J^la J^bj", 2.0, einsum("lk,kabi,la,bj->ij", &[&h.rs, &h.r_uddu, ju, ju])),
        term("∇_a∇^l(rs_kl J^ai J^kj)", 4.0, einsum("lijp,lp->ij", &[&d15, gi])),
        term("rs^ab rs_ba g^ij", -1.0, gi.mul_scalar(&ss)),
        term("τ* rs^ij", 2.0, h.rs_uu.mul_scalar(ts)),
        term("∇_b∇_a(τ* J^ia J^jb)", -2.0, einsum("ijabab->ij", &[&h.nabla2(&x18)?])),
        term("τ*² g^ij", 0.5, gi.mul_scalar(&(ts * ts))),
    ])
}

/// Terms of `V′^pq`.
pub fn v_prime_terms(h: &HermitianJets) -> Result<Vec<Term>> {
    let (j, ju, gi, k) = (&h.j, &h.j_uu, &h.ginv(), &h.k);
    let ts = &h.tau_star;
    let x3 = einsum("jv,vi,wpj,qw->pqi", &[ju, &h.rs_du, &h.dj, ju]);
    let x9 = einsum("qbc,bp,cu->pqu", &[&h.dj_uu, j, ju]).mul_scalar(ts);
    Ok(vec![
        term("J^jv J^iq rs_v^p K_ij", -1.0, einsum("jv,iq,vp,ij->pq", &[ju, ju, &h.rs_du, k])),
        term("J^jv J^iw J^pc J^qd R_vwcd K_ij", 0.5, einsum("jv,iw,pc,qd,vwcd,ij->pq", &[ju, ju, ju, ju, &h.r(), k])),
        term("∇_i(J^jv rs_v^i (∇_j J_w^p) J^qw)", -2.0, einsum("pqii->pq", &[&h.nabla(&x3)?])),
        term("rs^qi K_i^p", 1.0, einsum("qi,iw,wp->pq", &[&h.rs_uu, k, gi])),
        term("J^jv rs_v^i (∇_i J_a^p)(∇_j J^qa)", 1.0, einsum("jv,vi,api,qaj->pq", &[ju, &h.rs_du, &h.dj, &h.dj_uu])),
        term("J^ip rs_i^q κ", 1.0, einsum("ip,iq->pq", &[ju, &h.rs_du]).mul_scalar(&h.kappa)),
        term("τ* (∇_c J_a^p)(∇_u J^qa) J^cu", 0.5, einsum("apc,qau,cu->pq", &[&h.dj, &h.dj_uu, ju]).mul_scalar(ts)),
        term("τ* K^pq", 0.5, einsum("pw,qx,wx->pq", &[gi, gi, k]).mul_scalar(ts)),
        term("∇_u(τ* (∇_c J^qb) J_b^p J^cu)", -1.0, einsum("pquu->pq", &[&h.nabla(&x9)?])),
        term("J^lq rs_lk rs^kp", -4.0, einsum("lq,lk,kp->pq", &[ju, &h.rs, &h.rs_uu])),
        term("rs_lk J^lc J^pa J^qb R^k_cab", 2.0, einsum("lk,lc,pa,qb,kcab->pq", &[&h.rs, ju, ju, ju, &h.r_uddd])),
        term("τ* J^ap rs_a^q", -4.0, einsum("ap,aq->pq", &[ju, &h.rs_du]).mul_scalar(ts)),
    ])
}

/// `Σ c_k t_k` over a list of terms.
pub fn combine(terms: &[Term]) -> JetTensor {
    let mut it = terms.iter();
    let first = it.next().expect("nonempty term list");
    let mut acc = first.value.scale(first.coefficient);
    for t in it {
        acc = acc.lin_comb(1.0, &t.value, t.coefficient);
    }
    acc
}

/// Largest absolute component over all weighted terms.
pub fn term_scale(terms: &[Term]) -> f64 {
    terms.iter().map(|t| t.coefficient.abs() * t.value.max_abs_value()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::StructureKind;
    use crate::fixtures::random_almost_hermitian;

    const M: usize = 4;

    struct Vals {
        g: Vec<f64>,
        gi: Vec<f64>,
        j: Vec<f64>,
        r: Vec<f64>,
        r_up: Vec<f64>,
        rs: Vec<f64>,
        dj: Vec<f64>,
    }

    fn i2(a: usize, b: usize) -> usize {
        a * M + b
    }
    fn i3(a: usize, b: usize, c: usize) -> usize {
        (a * M + b) * M + c
    }
    fn i4(a: usize, b: usize, c: usize, d: usize) -> usize {
        ((a * M + b) * M + c) * M + d
    }

    fn setup() -> (HermitianJets, Vals) {
        let (g, j) = random_almost_hermitian(13, 4, 0, StructureKind::Complex, 0.3).unwrap();
        let p = [0.2, -0.1, 0.15, 0.3];
        let h = HermitianJets::new(g.at(&p, 4).unwrap(), j.at(&p, 4).unwrap()).unwrap();
        let v = Vals {
            g: h.geo.g.values(),
            gi: h.geo.ginv.values(),
            j: h.j.values(),
            r: h.geo.r.values(),
            r_up: h.geo.r_up.values(),
            rs: h.rs.values(),
            dj: h.dj.values(),
        };
        (h, v)
    }

    fn find<'a>(terms: &'a [Term], name: &str) -> &'a Term {
        terms.iter().find(|t| t.name == name).unwrap_or_else(|| panic!("no term {name}"))
    }

    fn close(t: &Term, oracle: &[f64]) {
        let got = t.value.values();
        let d = got.iter().zip(oracle).fold(0.0f64, |s, (a, b)| s.max((a - b).abs()));
        let scale = oracle.iter().fold(1.0f64, |s, v| s.max(v.abs()));
        assert!(d <= 1e-12 * scale, "{}: {d:e}", t.name);
    }

    /// `ρ*^ab`, `J^ab`, `J_ab` by loops.
    fn raised(v: &Vals) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut rs_uu = vec![0.0; M * M];
        let mut ju = vec![0.0; M * M];
        let mut jd = vec![0.0; M * M];
        for a in 0..M {
            for b in 0..M {
                for c in 0..M {
                    ju[i2(a, b)] += v.gi[i2(a, c)] * v.j[i2(c, b)];
                    jd[i2(a, b)] += v.j[i2(a, c)] * v.g[i2(c, b)];
                    for d in 0..M {
                        rs_uu[i2(a, b)] += v.gi[i2(a, c)] * v.gi[i2(b, d)] * v.rs[i2(c, d)];
                    }
                }
            }
        }
        (rs_uu, ju, jd)
    }

    #[test]
    fn star_ricci_by_loops() {
        let (h, v) = setup();
        let mut rs = vec![0.0; M * M];
        for i in 0..M {
            for jj in 0..M {
                for b in 0..M {
                    for c in 0..M {
                        for k in 0..M {
                            rs[i2(i, jj)] += 0.5 * v.j[i2(jj, b)] * v.j[i2(k, c)] * v.r_up[i4(i, b, c, k)];
                        }
                    }
                }
            }
        }
        close(&Term { name: "rs", coefficient: 1.0, value: h.rs.clone() }, &rs);
    }

    #[test]
    fn algebraic_t_prime_terms_by_loops() {
        let (h, v) = setup();
        let t = t_prime_terms(&h, -1.0).unwrap();
        let (rs_uu, ju, _) = raised(&v);
        let mut a = vec![0.0; M * M];
        let mut b = vec![0.0; M * M];
        for (i, jj) in (0..M).flat_map(|i| (0..M).map(move |j| (i, j))) {
            for x in 0..M {
                for y in 0..M {
                    for u in 0..M {
                        for w in 0..M {
                            // ρ*^xy R_xuwi J_y^u J_j^w
                            a[i2(i, jj)] += rs_uu[i2(x, y)] * v.r[i4(x, u, w, i)] * v.j[i2(y, u)] * v.j[i2(jj, w)];
                            // J_j^x J^uy R_xyk^l R_iul^k with (k, l) = (w, z)
                            for z in 0..M {
                                b[i2(i, jj)] +=
                                    v.j[i2(jj, x)] * ju[i2(u, y)] * v.r_up[i4(x, y, w, z)] * v.r_up[i4(i, u, z, w)];
                            }
                        }
                    }
                }
            }
        }
        close(find(&t, "rs^ab R_auvi J_b^u J_j^v"), &a);
        close(find(&t, "J_j^a J^ub R_abk^l R_iul^k"), &b);
        assert_eq!(find(&t, "J_j^a J^ub R_abk^l R_iul^k").coefficient, -4.0);
    }

    #[test]
    fn algebraic_s_prime_terms_by_loops() {
        let (h, v) = setup();
        let s = s_prime_terms(&h);
        let (rs_uu, ju, jd) = raised(&v);
        let mut a = vec![0.0; M * M];
        let mut b = vec![0.0; M * M];
        let mut c3 = vec![0.0; M * M];
        for i in 0..M {
            for jj in 0..M {
                for x in 0..M {
                    for y in 0..M {
                        a[i2(i, jj)] += rs_uu[i2(x, y)] * jd[i2(y, jj)] * v.rs[i2(x, i)];
                        for c in 0..M {
                            for u in 0..M {
                                for w in 0..M {
                                    b[i2(i, jj)] += rs_uu[i2(x, y)]
                                        * v.j[i2(y, c)]
                                        * v.j[i2(i, u)]
                                        * v.j[i2(jj, w)]
                                        * v.r[i4(x, c, u, w)];
                                }
                            }
                        }
                    }
                }
                for u in 0..M {
                    for x in 0..M {
                        for k in 0..M {
                            for l in 0..M {
                                c3[i2(i, jj)] += ju[i2(u, x)] * v.r_up[i4(jj, x, k, l)] * v.r_up[i4(i, u, l, k)];
                            }
                        }
                    }
                }
            }
        }
        close(find(&s, "rs^ab J_bj rs_ai"), &a);
        close(find(&s, "rs^ab J_b^c J_i^u J_j^v R_acuv"), &b);
        close(find(&s, "J^ua R_jak^l R_iul^k"), &c3);
    }

    #[test]
    fn nabla_j_contractions_by_loops() {
        let (h, v) = setup();
        let (_, ju, _) = raised(&v);
        // K_wc = (∇_w J_a^b)(∇_c J_u^a) J_b^u
        let mut k = vec![0.0; M * M];
        for w in 0..M {
            for c in 0..M {
                for a in 0..M {
                    for b in 0..M {
                        for u in 0..M {
                            k[i2(w, c)] += v.dj[i3(a, b, w)] * v.dj[i3(u, a, c)] * v.j[i2(b, u)];
                        }
                    }
                }
            }
        }
        close(&Term { name: "K", coefficient: 1.0, value: h.k.clone() }, &k);
        let u = u_prime_terms(&h).unwrap();
        let mut t4 = vec![0.0; M * M];
        for (i, jj) in (0..M).flat_map(|i| (0..M).map(move |j| (i, j))) {
            for c in 0..M {
                for vv in 0..M {
                    for w in 0..M {
                        for s in 0..M {
                            for d in 0..M {
                                t4[i2(i, jj)] += ju[i2(c, vv)]
                                    * v.r_up[i4(vv, w, s, i)]
                                    * ju[i2(d, w)]
                                    * ju[i2(s, jj)]
                                    * k[i2(d, c)];
                            }
                        }
                    }
                }
            }
        }
        close(find(&u, "J^cv R_vws^i J^dw J^sj K_dc"), &t4);
        let vt = v_prime_terms(&h).unwrap();
        let mut t2 = vec![0.0; M * M];
        for (p, q) in (0..M).flat_map(|i| (0..M).map(move |j| (i, j))) {
            for (jj, vv, i, w) in (0..M * M * M * M).map(|n| (n / 64, n / 16 % 4, n / 4 % 4, n % 4)) {
                for c in 0..M {
                    for d in 0..M {
                        t2[i2(p, q)] += ju[i2(jj, vv)]
                            * ju[i2(i, w)]
                            * ju[i2(p, c)]
                            * ju[i2(q, d)]
                            * v.r[i4(vv, w, c, d)]
                            * k[i2(i, jj)];
                    }
                }
            }
        }
        close(find(&vt, "J^jv J^iw J^pc J^qd R_vwcd K_ij"), &t2);
    }

    #[test]
    fn all_terms_vanish_on_the_flat_structure() {
        // flat metric with the standard structure: every building block is constant
        let g = crate::fields::standard_hermitian_metric(4, 0, StructureKind::Complex).unwrap();
        let g = JetTensor::constant(4, &[crate::jets::Variance::Co, crate::jets::Variance::Co], 4, &g).unwrap();
        let j = crate::fields::standard_endomorphism(4, StructureKind::Complex);
        let j = JetTensor::constant(4, &[crate::jets::Variance::Co, crate::jets::Variance::Contra], 4, &j).unwrap();
        let h = HermitianJets::new(g, j).unwrap();
        for t in t_prime_terms(&h, -1.0).unwrap().iter().chain(&u_prime_terms(&h).unwrap()).chain(&v_prime_terms(&h).unwrap()) {
            assert!(t.value.is_exactly_zero(), "{}", t.name);
        }
    }
}
