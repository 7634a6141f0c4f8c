use super::chain::{Closure, CorrelationChain};
use crate::error::{Error, Result};
use crate::model::GridModel;

/// Time derivative of `(k1, k2)`; the `k0` component is always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainRates {
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
}

impl ChainRates {
    pub(crate) fn zeros(m: usize) -> Self {
        Self {
            k1: vec![0.0; m],
            k2: vec![0.0; m * m],
        }
    }
}

fn check(chain: &CorrelationChain, model: &GridModel) -> Result<()> {
    if chain.domain().same_as(&model.domain) {
        Ok(())
    } else {
        Err(Error::DomainMismatch(
            "chain and model live on different grids".into(),
        ))
    }
}

/// Scratch space reused across evaluations.
pub(crate) struct Workspace {
    m: usize,
    conv_minus_k1: Vec<f64>,
    conv_plus_k1: Vec<f64>,
    diag_minus: Vec<f64>,
    column: Vec<f64>,
    row: Vec<f64>,
    col_minus: Vec<f64>,
    col_plus: Vec<f64>,
    flux: Vec<f64>,
}

impl Workspace {
    pub(crate) fn new(m: usize) -> Self {
        Self {
            m,
            conv_minus_k1: vec![0.0; m],
            conv_plus_k1: vec![0.0; m],
            diag_minus: vec![0.0; m],
            column: vec![0.0; m],
            row: vec![0.0; m],
            col_minus: vec![0.0; m * m],
            col_plus: vec![0.0; m * m],
            flux: vec![0.0; m * m],
        }
    }
}

pub(crate) fn apply_v_into(
    chain: &CorrelationChain,
    model: &GridModel,
    out: &mut ChainRates,
    ws: &mut Workspace,
) {
    let m = ws.m;
    let h = model.domain.cell_volume();
    let mort = model.mortality;
    let (k1, k2) = (chain.k1(), chain.k2());

    model.convolve_minus(k1, &mut ws.conv_minus_k1);
    model.convolve_plus(k1, &mut ws.conv_plus_k1);
    for x in 0..m {
        let mut s = 0.0;
        for &off in model.a_minus.nonzero() {
            let y = (x + m - off) % m;
            s += model.a_minus.at(off) * k2[x * m + y];
        }
        ws.diag_minus[x] = s * h;
    }
    for x in 0..m {
        out.k1[x] = -mort * k1[x] - ws.diag_minus[x] + ws.conv_plus_k1[x];
    }
    if chain.order() < 2 {
        out.k2.iter_mut().for_each(|v| *v = 0.0);
        return;
    }

    // col_*[x2 * m + x1] = sum_y a(x1 - y) k2(y, x2) h
    for x2 in 0..m {
        for y in 0..m {
            ws.column[y] = k2[y * m + x2];
        }
        model.convolve_plus(&ws.column, &mut ws.row);
        ws.col_plus[x2 * m..(x2 + 1) * m].copy_from_slice(&ws.row);
        if chain.closure() == Closure::ZeroThirdCumulant {
            model.convolve_minus(&ws.column, &mut ws.row);
            ws.col_minus[x2 * m..(x2 + 1) * m].copy_from_slice(&ws.row);
        }
    }

    // flux(x1, x2) = -int a-(x1 - y) k3(x1, x2, y) dy + int a+(x1 - y) k2(y, x2) dy
    for x1 in 0..m {
        let c = ws.conv_minus_k1[x1];
        for x2 in 0..m {
            let competition = match chain.closure() {
                Closure::MeanField => k1[x1] * k1[x2] * c,
                Closure::ZeroThirdCumulant => {
                    k1[x1] * ws.col_minus[x2 * m + x1]
                        + k1[x2] * ws.diag_minus[x1]
                        + k2[x1 * m + x2] * c
                        - 2.0 * k1[x1] * k1[x2] * c
                }
            };
            ws.flux[x1 * m + x2] = ws.col_plus[x2 * m + x1] - competition;
        }
    }
    for x1 in 0..m {
        for x2 in 0..m {
            out.k2[x1 * m + x2] =
                -2.0 * mort * k2[x1 * m + x2] + (ws.flux[x1 * m + x2] + ws.flux[x2 * m + x1]);
        }
    }
}

pub(crate) fn apply_c_into(chain: &CorrelationChain, model: &GridModel, out: &mut ChainRates) {
    let m = chain.points();
    out.k1.iter_mut().for_each(|v| *v = 0.0);
    if chain.order() < 2 {
        out.k2.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    let (k1, k2) = (chain.k1(), chain.k2());
    for x1 in 0..m {
        for x2 in 0..m {
            let am = model.a_minus.between(x1, x2);
            let ap = model.a_plus.between(x1, x2);
            out.k2[x1 * m + x2] = -2.0 * am * k2[x1 * m + x2] + ap * (k1[x1] + k1[x2]);
        }
    }
}

/// `V = A0 + B` applied to the chain, with `k3` supplied by the chain's closure.
pub fn apply_v(chain: &CorrelationChain, model: &GridModel) -> Result<ChainRates> {
    check(chain, model)?;
    let m = chain.points();
    let mut out = ChainRates::zeros(m);
    apply_v_into(chain, model, &mut out, &mut Workspace::new(m));
    Ok(out)
}

/// The order-`eps` part `C` of the rescaled generator.
pub fn apply_c(chain: &CorrelationChain, model: &GridModel) -> Result<ChainRates> {
    check(chain, model)?;
    let mut out = ChainRates::zeros(chain.points());
    apply_c_into(chain, model, &mut out);
    Ok(out)
}
