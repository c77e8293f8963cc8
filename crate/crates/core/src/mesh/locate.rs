//! Point location in a tetrahedral grid through a uniform bucket grid.

use super::grid::{barycentric_gradients, dot, sub, Point, SubdomainGrid};

pub struct PointLocator<'a> {
    grid: &'a SubdomainGrid,
    lo: Point,
    cell_size: Point,
    dims: [usize; 3],
    buckets: Vec<Vec<usize>>,
}

impl<'a> PointLocator<'a> {
    pub fn new(grid: &'a SubdomainGrid) -> Self {
        assert_eq!(grid.dim, 3, "point location needs a 3D grid");
        let (lo, hi) = grid.bounding_box();
        let n = grid.num_cells().max(1) as f64;
        let per_axis = (n / 2.0).cbrt().ceil().max(1.0) as usize;
        let dims = [per_axis; 3];
        let mut cell_size = [0.0; 3];
        for k in 0..3 {
            cell_size[k] = ((hi[k] - lo[k]) / dims[k] as f64).max(f64::MIN_POSITIVE);
        }
        let mut buckets = vec![Vec::new(); dims[0] * dims[1] * dims[2]];
        let mut this = Self { grid, lo, cell_size, dims, buckets: Vec::new() };
        for c in 0..grid.num_cells() {
            let pts = grid.cell_points(c);
            let mut a = [usize::MAX; 3];
            let mut b = [0; 3];
            for p in &pts {
                let ix = this.index(*p);
                for k in 0..3 {
                    a[k] = a[k].min(ix[k]);
                    b[k] = b[k].max(ix[k]);
                }
            }
            for i in a[0]..=b[0] {
                for j in a[1]..=b[1] {
                    for k in a[2]..=b[2] {
                        buckets[i + dims[0] * (j + dims[1] * k)].push(c);
                    }
                }
            }
        }
        this.buckets = buckets;
        this
    }

    fn index(&self, p: Point) -> [usize; 3] {
        let mut ix = [0; 3];
        for k in 0..3 {
            let t = ((p[k] - self.lo[k]) / self.cell_size[k]).floor();
            ix[k] = (t.max(0.0) as usize).min(self.dims[k] - 1);
        }
        ix
    }

    /// Lowest-index cell containing `p` (boundary points included), or `None`.
    pub fn locate(&self, p: Point) -> Option<usize> {
        let ix = self.index(p);
        let bucket = &self.buckets[ix[0] + self.dims[0] * (ix[1] + self.dims[1] * ix[2])];
        bucket.iter().copied().find(|&c| self.contains(c, p))
    }

    fn contains(&self, c: usize, p: Point) -> bool {
        let pts = self.grid.cell_points(c);
        let Some(g) = barycentric_gradients(&pts) else { return false };
        let mut l0 = 1.0;
        for gi in g.iter().skip(1) {
            let l = dot(*gi, sub(p, pts[0]));
            if l < -1e-10 {
                return false;
            }
            l0 -= l;
        }
        l0 >= -1e-10
    }
}
