//! Oracles shared by the integration tests.

use barycut::critical::SphereField;
use barycut::sphere::Direction;

struct Dsu(Vec<usize>);

impl Dsu {
    fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut i = i;
        while self.0[i] != r {
            let next = self.0[i];
            self.0[i] = r;
            i = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        self.0[ra] = rb;
    }
}

/// Best bottleneck over paths on a latitude-longitude grid of S²: nodes are
/// switched on in decreasing value until the nodes nearest `a` and `b` connect.
pub fn widest_path_value<F: SphereField>(field: &F, a: &Direction, b: &Direction, step_deg: f64) -> f64 {
    let n_lat = (180.0 / step_deg).round() as usize + 1;
    let n_lon = (360.0 / step_deg).round() as usize;
    let h = step_deg.to_radians();
    let point = |i: usize, j: usize| {
        let (lat, lon) = (-std::f64::consts::FRAC_PI_2 + i as f64 * h, j as f64 * h);
        vec![lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin()]
    };
    let idx = |i: usize, j: usize| i * n_lon + j;
    let nearest = |d: &Direction| {
        let v = d.as_slice();
        let lat = v[2].clamp(-1.0, 1.0).asin();
        let lon = v[1].atan2(v[0]).rem_euclid(2.0 * std::f64::consts::PI);
        let i = ((lat + std::f64::consts::FRAC_PI_2) / h).round() as usize;
        idx(i.min(n_lat - 1), ((lon / h).round() as usize) % n_lon)
    };
    let values: Vec<f64> = (0..n_lat)
        .flat_map(|i| (0..n_lon).map(move |j| (i, j)))
        .map(|(i, j)| field.value(&Direction::new(point(i, j)).unwrap()))
        .collect();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|x, y| values[*y].total_cmp(&values[*x]));
    let (sa, sb) = (nearest(a), nearest(b));
    let mut on = vec![false; values.len()];
    let mut dsu = Dsu((0..values.len()).collect());
    for &k in &order {
        on[k] = true;
        let (i, j) = (k / n_lon, k % n_lon);
        for di in -1i64..=1 {
            for dj in -1i64..=1 {
                let ii = i as i64 + di;
                if ii < 0 || ii >= n_lat as i64 {
                    continue;
                }
                let jj = (j as i64 + dj).rem_euclid(n_lon as i64) as usize;
                let m = idx(ii as usize, jj);
                if on[m] {
                    dsu.union(k, m);
                }
            }
        }
        // the pole rows are single points
        if i == 0 || i == n_lat - 1 {
            dsu.union(k, idx(i, 0));
        }
        if on[sa] && on[sb] && dsu.find(sa) == dsu.find(sb) {
            return values[k];
        }
    }
    unreachable!("the grid is connected")
}
