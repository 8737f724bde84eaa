use std::collections::BinaryHeap;

// Kronrod 15-point abscissae and weights with the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const NODES_PER_PANEL: usize = 15;

#[derive(Debug, Clone, Copy)]
pub struct QuadSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Hard cap on integrand evaluations.
    pub max_nodes: usize,
    /// Number of equal panels the interval is split into before adapting.
    pub initial_panels: usize,
}

impl Default for QuadSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-15,
            max_nodes: 2048,
            initial_panels: 4,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub nodes: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    Panel {
        a,
        b,
        value: kron * h,
        error: ((kron - gauss) * h).abs(),
    }
}

/// Adaptive Gauss-Kronrod (7/15) quadrature of `f` over the finite interval
/// `[a, b]`, bisecting the panel with the largest error estimate until the
/// total estimate drops below `max(abs_tol, rel_tol * |I|)` or the node
/// budget is spent.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, settings: QuadSettings) -> QuadResult {
    if a == b {
        return QuadResult {
            value: 0.0,
            error: 0.0,
            nodes: 0,
            converged: true,
        };
    }
    let panels = settings.initial_panels.max(1);
    let width = (b - a) / panels as f64;
    let mut heap: BinaryHeap<Panel> = (0..panels)
        .map(|i| {
            let lo = a + width * i as f64;
            let hi = if i + 1 == panels { b } else { lo + width };
            gk15(&f, lo, hi)
        })
        .collect();
    let mut nodes = panels * NODES_PER_PANEL;

    loop {
        let (value, error) = totals(&heap);
        let target = settings.abs_tol.max(settings.rel_tol * value.abs());
        if error <= target {
            return QuadResult {
                value,
                error,
                nodes,
                converged: true,
            };
        }
        if nodes + 2 * NODES_PER_PANEL > settings.max_nodes {
            return QuadResult {
                value,
                error,
                nodes,
                converged: false,
            };
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        heap.push(gk15(&f, worst.a, mid));
        heap.push(gk15(&f, mid, worst.b));
        nodes += 2 * NODES_PER_PANEL;
    }
}

fn totals(heap: &BinaryHeap<Panel>) -> (f64, f64) {
    let mut value = super::CompensatedSum::new();
    let mut error = 0.0;
    for p in heap.iter() {
        value.add(p.value);
        error += p.error;
    }
    (value.value(), error)
}
