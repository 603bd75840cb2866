//! Successive shortest paths on the dense bipartite transportation graph,
//! with Johnson potentials that double as the Kantorovich dual.

use super::{AtomicMeasure, CostNorm, PlanPair, TransportPlan};
use crate::boundary::MASS_REL_TOL;
use crate::error::{Error, Result};

struct Network {
    ns: usize,
    nt: usize,
    cost: Vec<f64>,
    supply: Vec<f64>,
    demand: Vec<f64>,
    flow: Vec<f64>,
    /// Node order: 0 super source, 1..=ns sources, then targets, then sink.
    pot: Vec<f64>,
}

impl Network {
    fn c(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.nt + j]
    }

    fn src(&self, i: usize) -> usize {
        1 + i
    }

    fn tgt(&self, j: usize) -> usize {
        1 + self.ns + j
    }

    fn sink(&self) -> usize {
        1 + self.ns + self.nt
    }

    /// One Dijkstra pass from the super source; returns false when no
    /// augmenting path remains.
    fn augment(&mut self, dust: f64) -> bool {
        let (ns, nt) = (self.ns, self.nt);
        let nv = ns + nt + 2;
        let sink = self.sink();
        let mut dist = vec![f64::INFINITY; nv];
        let mut pred = vec![usize::MAX; nv];
        let mut done = vec![false; nv];
        dist[0] = 0.0;
        for i in 0..ns {
            if self.supply[i] > dust {
                let v = self.src(i);
                let rc = (self.pot[0] - self.pot[v]).max(0.0);
                if rc < dist[v] {
                    dist[v] = rc;
                    pred[v] = 0;
                }
            }
        }
        done[0] = true;
        loop {
            // Dense selection; ties go to the lowest node index.
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for v in 1..nv {
                if !done[v] && dist[v] < best {
                    best = dist[v];
                    u = v;
                }
            }
            if u == usize::MAX {
                return false;
            }
            done[u] = true;
            if u == sink {
                break;
            }
            if u <= ns {
                let i = u - 1;
                for j in 0..nt {
                    let v = self.tgt(j);
                    if done[v] {
                        continue;
                    }
                    let rc = (self.c(i, j) + self.pot[u] - self.pot[v]).max(0.0);
                    let nd = best + rc;
                    if nd < dist[v] {
                        dist[v] = nd;
                        pred[v] = u;
                    }
                }
            } else {
                let j = u - 1 - ns;
                for i in 0..ns {
                    if self.flow[i * nt + j] <= dust {
                        continue;
                    }
                    let v = self.src(i);
                    if done[v] {
                        continue;
                    }
                    let rc = (-self.c(i, j) + self.pot[u] - self.pot[v]).max(0.0);
                    let nd = best + rc;
                    if nd < dist[v] {
                        dist[v] = nd;
                        pred[v] = u;
                    }
                }
                if self.demand[j] > dust && !done[sink] {
                    let rc = (self.pot[u] - self.pot[sink]).max(0.0);
                    let nd = best + rc;
                    if nd < dist[sink] {
                        dist[sink] = nd;
                        pred[sink] = u;
                    }
                }
            }
        }
        let dt = dist[sink];
        for v in 0..nv {
            self.pot[v] += dist[v].min(dt);
        }
        // Walk back and find the bottleneck.
        let mut path = vec![sink];
        let mut v = sink;
        while v != 0 {
            v = pred[v];
            path.push(v);
        }
        path.reverse();
        let mut theta = f64::INFINITY;
        for w in path.windows(2) {
            let (a, b) = (w[0], w[1]);
            if a == 0 {
                theta = theta.min(self.supply[b - 1]);
            } else if b == sink {
                theta = theta.min(self.demand[a - 1 - ns]);
            } else if a > ns {
                // target -> source: cancel flow
                theta = theta.min(self.flow[(b - 1) * nt + (a - 1 - ns)]);
            }
        }
        for w in path.windows(2) {
            let (a, b) = (w[0], w[1]);
            if a == 0 {
                self.supply[b - 1] -= theta;
            } else if b == sink {
                self.demand[a - 1 - ns] -= theta;
            } else if a <= ns {
                self.flow[(a - 1) * nt + (b - 1 - ns)] += theta;
            } else {
                let idx = (b - 1) * nt + (a - 1 - ns);
                self.flow[idx] -= theta;
                if self.flow[idx] <= dust {
                    self.flow[idx] = 0.0;
                }
            }
        }
        true
    }
}

/// Remove cycles from the support so that it forms a forest (a basic
/// solution). Each cycle is shifted in the non-increasing cost direction.
fn cancel_cycles(ns: usize, nt: usize, cost: &[f64], flow: &mut [f64], dust: f64) {
    loop {
        let edges: Vec<(usize, usize)> = (0..ns)
            .flat_map(|i| (0..nt).map(move |j| (i, j)))
            .filter(|&(i, j)| flow[i * nt + j] > dust)
            .collect();
        let nv = ns + nt;
        let mut parent: Vec<usize> = (0..nv).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let nx = p[y];
                p[y] = r;
                y = nx;
            }
            r
        }
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nv];
        let mut cycle: Option<Vec<usize>> = None;
        for &(i, j) in &edges {
            let (a, b) = (i, ns + j);
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                // Path from b to a in the forest, then close with (a, b).
                let mut prev = vec![usize::MAX; nv];
                let mut queue = std::collections::VecDeque::from([b]);
                prev[b] = b;
                while let Some(x) = queue.pop_front() {
                    if x == a {
                        break;
                    }
                    for &y in &adj[x] {
                        if prev[y] == usize::MAX {
                            prev[y] = x;
                            queue.push_back(y);
                        }
                    }
                }
                let mut nodes = vec![a];
                let mut x = a;
                while x != b {
                    x = prev[x];
                    nodes.push(x);
                }
                cycle = Some(nodes);
                break;
            }
            parent[ra] = rb;
            adj[a].push(b);
            adj[b].push(a);
        }
        let Some(nodes) = cycle else { return };
        // nodes: a(source) ... b(target); edges alternate, closing edge (a, b).
        let mut cyc_edges: Vec<(usize, usize)> = Vec::new();
        for w in nodes.windows(2) {
            let (x, y) = (w[0], w[1]);
            let (i, j) = if x < ns { (x, y - ns) } else { (y, x - ns) };
            cyc_edges.push((i, j));
        }
        cyc_edges.push((nodes[0], nodes[nodes.len() - 1] - ns));
        // Alternating signs: even positions +, odd -.
        let delta: f64 = cyc_edges
            .iter()
            .enumerate()
            .map(|(k, &(i, j))| if k % 2 == 0 { cost[i * nt + j] } else { -cost[i * nt + j] })
            .sum();
        let minus_parity = if delta > 0.0 { 0 } else { 1 };
        let theta = cyc_edges
            .iter()
            .enumerate()
            .filter(|(k, _)| k % 2 == minus_parity)
            .map(|(_, &(i, j))| flow[i * nt + j])
            .fold(f64::INFINITY, f64::min);
        let mut zeroed = false;
        for (k, &(i, j)) in cyc_edges.iter().enumerate() {
            let idx = i * nt + j;
            if k % 2 == minus_parity {
                flow[idx] -= theta;
                if !zeroed && flow[idx] <= dust {
                    flow[idx] = 0.0;
                    zeroed = true;
                }
            } else {
                flow[idx] += theta;
            }
        }
        for &(i, j) in &cyc_edges {
            if flow[i * nt + j] <= dust {
                flow[i * nt + j] = 0.0;
            }
        }
    }
}

/// Exact solution of the discrete transportation problem between two
/// atomic measures of equal mass, with Kantorovich potentials.
///
/// A mass imbalance within the relative mass tolerance is removed by
/// rescaling the targets (and recorded as a warning); larger imbalances are
/// rejected.
pub fn solve(sources: &AtomicMeasure, targets: &AtomicMeasure, norm: CostNorm) -> Result<TransportPlan> {
    let mut plan = TransportPlan::empty(norm);
    let mp = sources.total_mass();
    let mm = targets.total_mass();
    if sources.is_empty() && targets.is_empty() {
        return Ok(plan);
    }
    let tol = MASS_REL_TOL * (mp + mm);
    if sources.is_empty() || targets.is_empty() || (mp - mm).abs() > tol {
        return Err(Error::MassMismatch { plus: mp, minus: mm });
    }
    let mut targets = targets.clone();
    if mp != mm {
        let k = mp / mm;
        for a in &mut targets.atoms {
            a.mass *= k;
        }
        // Rounding-level imbalances are silent.
        if (mp - mm).abs() > 1e-12 * (mp + mm) {
            plan.warnings.push(format!("target masses rescaled by {k:.15} to balance a deficit of {:.3e}", mp - mm));
        }
    }
    let (ns, nt) = (sources.len(), targets.len());
    let mut cost = vec![0.0; ns * nt];
    let mut max_cost: f64 = 0.0;
    for (i, a) in sources.atoms.iter().enumerate() {
        for (j, b) in targets.atoms.iter().enumerate() {
            let c = norm.dist(a.point, b.point);
            cost[i * nt + j] = c;
            max_cost = max_cost.max(c);
        }
    }
    let dust = 1e-14 * mp;
    let mut net = Network {
        ns,
        nt,
        cost,
        supply: sources.atoms.iter().map(|a| a.mass).collect(),
        demand: targets.atoms.iter().map(|a| a.mass).collect(),
        flow: vec![0.0; ns * nt],
        pot: vec![0.0; ns + nt + 2],
    };
    let mut guard = 0usize;
    while net.supply.iter().any(|&s| s > dust) && net.demand.iter().any(|&d| d > dust) {
        if !net.augment(dust) {
            break;
        }
        guard += 1;
        if guard > 4 * (ns + nt) * (ns + nt) + 16 {
            return Err(Error::Config("transport solver failed to converge".into()));
        }
    }
    cancel_cycles(ns, nt, &net.cost, &mut net.flow, dust);

    // Duals: phi = -potential; then the c-transform pair, which leaves the
    // values on the support unchanged and makes phi 1-Lipschitz everywhere.
    let phi0: Vec<f64> = (0..ns).map(|i| -net.pot[net.src(i)]).collect();
    let mut psi = vec![f64::NEG_INFINITY; nt];
    for j in 0..nt {
        for i in 0..ns {
            psi[j] = psi[j].max(phi0[i] - net.c(i, j));
        }
    }
    let mut phi = vec![f64::INFINITY; ns];
    for i in 0..ns {
        for j in 0..nt {
            phi[i] = phi[i].min(net.c(i, j) + psi[j]);
        }
    }
    let shift = psi.iter().copied().fold(f64::INFINITY, f64::min);
    for v in phi.iter_mut() {
        *v -= shift;
    }
    for v in psi.iter_mut() {
        *v -= shift;
    }

    let mut pairs = Vec::new();
    let mut total = 0.0;
    for i in 0..ns {
        for j in 0..nt {
            let m = net.flow[i * nt + j];
            if m > dust {
                pairs.push(PlanPair { source: i, target: j, mass: m });
                total += m * net.c(i, j);
            }
        }
    }
    plan.sources = sources.clone();
    plan.targets = targets;
    plan.pairs = pairs;
    plan.cost = total;
    plan.phi_source = phi;
    plan.phi_target = psi;
    plan.eps_dual = 1e-8 * (1.0 + max_cost);
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point, Side};

    fn measure(pts: &[(f64, f64)], mass: f64) -> AtomicMeasure {
        let v: Vec<(Point, Side)> = pts.iter().map(|&(x, y)| (Point::new(x, y), Side::Outer)).collect();
        AtomicMeasure::from_points(&v, mass)
    }

    #[test]
    fn empty_plan() {
        let plan = solve(&AtomicMeasure::default(), &AtomicMeasure::default(), CostNorm::Euclidean).unwrap();
        assert!(plan.is_empty());
        assert_eq!(plan.cost, 0.0);
    }

    #[test]
    fn two_by_two() {
        let s = measure(&[(0.0, 1.0), (0.0, -1.0)], 1.0);
        let t = measure(&[(3.0, 1.0), (3.0, -1.0)], 1.0);
        let plan = solve(&s, &t, CostNorm::Euclidean).unwrap();
        // Brute force over both matchings: 6 < 2 sqrt(13).
        let straight = 3.0 + 3.0;
        let crossed = 2.0 * 13f64.sqrt();
        assert!(straight < crossed);
        assert_eq!(plan.cost, straight);
        assert_eq!(plan.pairs.len(), 2);
        assert_eq!((plan.pairs[0].source, plan.pairs[0].target), (0, 0));
        assert_eq!((plan.pairs[1].source, plan.pairs[1].target), (1, 1));
        for p in &plan.pairs {
            let r = plan.phi_source[p.source] - plan.phi_target[p.target] - plan.pair_cost(p);
            assert!(r.abs() <= 1e-9);
        }
    }

    #[test]
    fn unequal_masses_split() {
        let s = measure(&[(0.0, 0.0)], 2.0);
        let t = measure(&[(1.0, 0.0), (0.0, 1.0)], 1.0);
        let plan = solve(&s, &t, CostNorm::Euclidean).unwrap();
        assert_eq!(plan.pairs.len(), 2);
        assert!((plan.cost - 2.0).abs() < 1e-15);
    }

    #[test]
    fn mismatch_is_rejected_or_rescaled() {
        let s = measure(&[(0.0, 0.0)], 1.0);
        let t = measure(&[(1.0, 0.0)], 0.5);
        assert!(matches!(solve(&s, &t, CostNorm::Euclidean), Err(Error::MassMismatch { .. })));
        let t = measure(&[(1.0, 0.0)], 1.0 - 1e-10);
        let plan = solve(&s, &t, CostNorm::Euclidean).unwrap();
        assert_eq!(plan.warnings.len(), 1);
        assert!((plan.pairs[0].mass - 1.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_ties_give_basic_solution() {
        // Four sources and four targets on a square: many optimal plans.
        let s = measure(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)], 0.5);
        let t = measure(&[(0.5, 0.5), (0.5, 0.5), (0.5, 0.5), (0.5, 0.5)], 0.5);
        let plan = solve(&s, &t, CostNorm::Euclidean).unwrap();
        assert!(plan.pairs.len() < 4 + 4);
        assert!((plan.cost - 4.0 * 0.5 * 0.5f64.sqrt()).abs() < 1e-12);
    }
}
