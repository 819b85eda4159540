use super::{EmbeddingStore, ModelKind, Real, SparseGrad};
use crate::data::Triplet;

type Grad<'a, T> = Option<(T, &'a mut SparseGrad<T>)>;

pub(super) fn score<T: Real>(s: &EmbeddingStore<T>, t: Triplet, grad: Grad<'_, T>) -> T {
    match s.kind {
        ModelKind::TransE => trans_e(s, t, grad),
        ModelKind::TransH => trans_h(s, t, grad),
        ModelKind::TransD => trans_d(s, t, grad),
        ModelKind::DistMult => dist_mult(s, t, grad),
        ModelKind::ComplEx => compl_ex(s, t, grad),
        ModelKind::SimplE => simpl_e(s, t, grad),
        ModelKind::RotatE => rotat_e(s, t, grad),
    }
}

#[inline]
fn sign<T: Real>(x: T) -> T {
    if x > T::zero() {
        T::one()
    } else if x < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

#[inline]
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn trans_e<T: Real>(s: &EmbeddingStore<T>, t: Triplet, grad: Grad<'_, T>) -> T {
    let (h, r, tl) = (
        s.params[0].row(t.head),
        s.params[1].row(t.relation),
        s.params[0].row(t.tail),
    );
    let mut score = T::zero();
    for i in 0..h.len() {
        score = score - (h[i] + r[i] - tl[i]).abs();
    }
    if let Some((coef, g)) = grad {
        let (oh, or, ot) = (
            g.entry(0, t.head),
            g.entry(1, t.relation),
            g.entry(0, t.tail),
        );
        let b = g.buf_mut();
        for i in 0..h.len() {
            let d = -sign(h[i] + r[i] - tl[i]) * coef;
            b[oh + i] = b[oh + i] + d;
            b[or + i] = b[or + i] + d;
            b[ot + i] = b[ot + i] - d;
        }
    }
    score
}

fn trans_h<T: Real>(s: &EmbeddingStore<T>, t: Triplet, grad: Grad<'_, T>) -> T {
    let h = s.params[0].row(t.head);
    let tl = s.params[0].row(t.tail);
    let r = s.params[1].row(t.relation);
    let w = s.params[2].row(t.relation);
    // x = (h - t) - (w·(h - t)) w + r
    let wd = dot(w, h) - dot(w, tl);
    let x = |i: usize| h[i] - tl[i] - wd * w[i] + r[i];
    let mut score = T::zero();
    for i in 0..h.len() {
        score = score - x(i).abs();
    }
    if let Some((coef, g)) = grad {
        let (oh, or, ot, ow) = (
            g.entry(0, t.head),
            g.entry(1, t.relation),
            g.entry(0, t.tail),
            g.entry(2, t.relation),
        );
        let b = g.buf_mut();
        let mut gw = T::zero();
        for i in 0..h.len() {
            gw = gw + (-sign(x(i))) * w[i];
        }
        for i in 0..h.len() {
            let gi = -sign(x(i));
            let proj = gi - w[i] * gw;
            b[oh + i] = b[oh + i] + coef * proj;
            b[ot + i] = b[ot + i] - coef * proj;
            b[or + i] = b[or + i] + coef * gi;
            b[ow + i] = b[ow + i] + coef * (-gw * (h[i] - tl[i]) - wd * gi);
        }
    }
    score
}

fn trans_d<T: Real>(s: &EmbeddingStore<T>, t: Triplet, grad: Grad<'_, T>) -> T {
    let h = s.params[0].row(t.head);
    let tl = s.params[0].row(t.tail);
    let r = s.params[1].row(t.relation);
    let p = s.params[2].row(t.head);
    let q = s.params[2].row(t.tail);
    let wr = s.params[3].row(t.relation);
    // x = h + wr (p·h) + r - t - wr (q·t)
    let (ph, qt) = (dot(p, h), dot(q, tl));
    let x = |i: usize| h[i] + wr[i] * ph + r[i] - tl[i] - wr[i] * qt;
    let mut score = T::zero();
    for i in 0..h.len() {
        score = score - x(i).abs();
    }
    if let Some((coef, g)) = grad {
        let oh = g.entry(0, t.head);
        let ot = g.entry(0, t.tail);
        let or = g.entry(1, t.relation);
        let op = g.entry(2, t.head);
        let oq = g.entry(2, t.tail);
        let ow = g.entry(3, t.relation);
        let b = g.buf_mut();
        let mut wg = T::zero();
        for i in 0..h.len() {
            wg = wg + wr[i] * (-sign(x(i)));
        }
        for i in 0..h.len() {
            let gi = -sign(x(i));
            b[oh + i] = b[oh + i] + coef * (gi + wg * p[i]);
            b[op + i] = b[op + i] + coef * wg * h[i];
            b[ot + i] = b[ot + i] - coef * (gi + wg * q[i]);
            b[oq + i] = b[oq + i] - coef * wg * tl[i];
            b[or + i] = b[or + i] + coef * gi;
            b[ow + i] = b[ow + i] + coef * (ph - qt) * gi;
        }
    }
    score
}

fn dist_mult<T: Real>(s: &EmbeddingStore<T>, t: Triplet, grad: Grad<'_, T>) -> T {
    let (h, r, tl) = (
        s.params[0].row(t.head),
        s.params[1].row(t.relation),
        s.params[0].row(t.tail),
    );
    let mut score = T::zero();
    for i in 0..h.len() {
        score = score + h[i] * r[i] * tl[i];
    }
    if let Some((coef, g)) = grad {
        let (oh, or, ot) = (
            g.entry(0, t.head),
            g.entry(1, t.relation),
            g.entry(0, t.tail),
        );
        let b = g.buf_mut();
        for i in 0..h.len() {
            b[oh + i] = b[oh + i] + coef * r[i] * tl[i];
            b[or + i] = b[or + i] + coef * h[i] * tl[i];
            b[ot + i] = b[ot + i] + coef * h[i] * r[i];
        }
    }
    score
}

fn compl_ex<T: Real>(s: &EmbeddingStore<T>, t: Triplet, grad: Grad<'_, T>) -> T {
    let (h, r, tl) = (
        s.params[0].row(t.head),
        s.params[1].row(t.relation),
        s.params[0].row(t.tail),
    );
    let d = h.len() / 2;
    let mut score = T::zero();
    for i in 0..d {
        let (a, b, c, dd, e, f) = (h[i], h[d + i], r[i], r[d + i], tl[i], tl[d + i]);
        score = score + (a * c - b * dd) * e + (a * dd + b * c) * f;
    }
    if let Some((coef, g)) = grad {
        let (oh, or, ot) = (
            g.entry(0, t.head),
            g.entry(1, t.relation),
            g.entry(0, t.tail),
        );
        let buf = g.buf_mut();
        for i in 0..d {
            let (a, b, c, dd, e, f) = (h[i], h[d + i], r[i], r[d + i], tl[i], tl[d + i]);
            buf[oh + i] = buf[oh + i] + coef * (c * e + dd * f);
            buf[oh + d + i] = buf[oh + d + i] + coef * (c * f - dd * e);
            buf[or + i] = buf[or + i] + coef * (a * e + b * f);
            buf[or + d + i] = buf[or + d + i] + coef * (a * f - b * e);
            buf[ot + i] = buf[ot + i] + coef * (a * c - b * dd);
            buf[ot + d + i] = buf[ot + d + i] + coef * (a * dd + b * c);
        }
    }
    score
}

fn simpl_e<T: Real>(s: &EmbeddingStore<T>, t: Triplet, grad: Grad<'_, T>) -> T {
    let h1 = s.params[0].row(t.head);
    let t1 = s.params[0].row(t.tail);
    let r1 = s.params[1].row(t.relation);
    let h2 = s.params[2].row(t.head);
    let t2 = s.params[2].row(t.tail);
    let r2 = s.params[3].row(t.relation);
    let k = if s.simple_half { T::of(0.5) } else { T::one() };
    let mut score = T::zero();
    for i in 0..h1.len() {
        score = score + h1[i] * r1[i] * t2[i] + h2[i] * r2[i] * t1[i];
    }
    if let Some((coef, g)) = grad {
        let c = coef * k;
        let oh1 = g.entry(0, t.head);
        let ot1 = g.entry(0, t.tail);
        let or1 = g.entry(1, t.relation);
        let oh2 = g.entry(2, t.head);
        let ot2 = g.entry(2, t.tail);
        let or2 = g.entry(3, t.relation);
        let b = g.buf_mut();
        for i in 0..h1.len() {
            b[oh1 + i] = b[oh1 + i] + c * r1[i] * t2[i];
            b[or1 + i] = b[or1 + i] + c * h1[i] * t2[i];
            b[ot2 + i] = b[ot2 + i] + c * h1[i] * r1[i];
            b[oh2 + i] = b[oh2 + i] + c * r2[i] * t1[i];
            b[or2 + i] = b[or2 + i] + c * h2[i] * t1[i];
            b[ot1 + i] = b[ot1 + i] + c * h2[i] * r2[i];
        }
    }
    score * k
}

fn rotat_e<T: Real>(s: &EmbeddingStore<T>, t: Triplet, grad: Grad<'_, T>) -> T {
    let (h, r, tl) = (
        s.params[0].row(t.head),
        s.params[1].row(t.relation),
        s.params[0].row(t.tail),
    );
    let d = h.len() / 2;
    let parts = |i: usize| {
        let (a, b, c, dd, e, f) = (h[i], h[d + i], r[i], r[d + i], tl[i], tl[d + i]);
        (a * c - b * dd - e, a * dd + b * c - f)
    };
    let mut score = T::zero();
    for i in 0..d {
        let (x, y) = parts(i);
        score = score - (x * x + y * y).sqrt();
    }
    if let Some((coef, g)) = grad {
        let (oh, or, ot) = (
            g.entry(0, t.head),
            g.entry(1, t.relation),
            g.entry(0, t.tail),
        );
        let buf = g.buf_mut();
        for i in 0..d {
            let (x, y) = parts(i);
            let m = (x * x + y * y).sqrt();
            if m == T::zero() {
                continue;
            }
            let (gx, gy) = (-x / m * coef, -y / m * coef);
            let (a, b, c, dd) = (h[i], h[d + i], r[i], r[d + i]);
            buf[oh + i] = buf[oh + i] + gx * c + gy * dd;
            buf[oh + d + i] = buf[oh + d + i] - gx * dd + gy * c;
            buf[or + i] = buf[or + i] + gx * a + gy * b;
            buf[or + d + i] = buf[or + d + i] - gx * b + gy * a;
            buf[ot + i] = buf[ot + i] - gx;
            buf[ot + d + i] = buf[ot + d + i] - gy;
        }
    }
    score
}
