use super::{MuscleGroup, Spring, SpringKind, TongueMesh, TongueModel};
use crate::geom::Vec2;
use crate::gesture::Muscle;

/// Parameters of the built-in tongue. The mesh is a band between elliptical
/// arcs around `center`: row 0 lies on the full ellipse (the dorsum), the
/// last row on the innermost scaled copy. Columns sweep from the tip angle
/// to the root angle.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceGeometry {
    pub columns: usize,
    pub rows: usize,
    pub center: Vec2,
    /// Horizontal and vertical semi-axes of the surface ellipse, cm.
    pub semi_axes: (f64, f64),
    /// Degrees, counter-clockwise from anterior.
    pub tip_angle: f64,
    pub root_angle: f64,
    /// Radial scale of the innermost row.
    pub inner_scale: f64,
    pub structural_stiffness: f64,
    pub shear_stiffness: f64,
    pub boundary_stiffness: f64,
    pub max_force: f64,
    /// Pinned floor-row columns, inclusive.
    pub fixed_columns: (usize, usize),
    /// Floor-row column of the genioglossus origin; must be pinned.
    pub anchor_column: usize,
    /// `(row, column)` nodes reached by the posterior genioglossus fan.
    pub ggp_targets: Vec<(usize, usize)>,
    /// `(row, column)` nodes reached by the anterior genioglossus fan.
    pub gga_targets: Vec<(usize, usize)>,
}

impl Default for ReferenceGeometry {
    fn default() -> Self {
        ReferenceGeometry {
            columns: 10,
            rows: 5,
            center: Vec2::new(4.6, 4.0),
            semi_axes: (3.6, 5.0),
            tip_angle: 40.0,
            root_angle: 205.0,
            inner_scale: 0.4,
            structural_stiffness: 40.0,
            shear_stiffness: 15.0,
            boundary_stiffness: 15.0,
            max_force: 2.0,
            fixed_columns: (1, 9),
            anchor_column: 2,
            ggp_targets: vec![(0, 5), (0, 6), (0, 7), (1, 6)],
            gga_targets: vec![(1, 0), (2, 0), (1, 1), (2, 1)],
        }
    }
}

/// The built-in tongue: 10×5 nodes with the floor row pinned except under
/// the tip. Both genioglossus fans radiate from a floor node just behind the
/// tip, so the posterior fan drags the root forward and down.
pub fn build_reference_tongue() -> (TongueModel, ReferenceGeometry) {
    let g = ReferenceGeometry::default();
    (g.build(), g)
}

impl ReferenceGeometry {
    pub fn build(&self) -> TongueModel {
        let (cols, rows) = (self.columns, self.rows);
        let idx = |r: usize, c: usize| r * cols + c;

        let mut nodes = Vec::with_capacity(cols * rows);
        for r in 0..rows {
            let scale = 1.0 - (1.0 - self.inner_scale) * r as f64 / (rows - 1) as f64;
            for c in 0..cols {
                let frac = c as f64 / (cols - 1) as f64;
                let theta =
                    (self.tip_angle + frac * (self.root_angle - self.tip_angle)).to_radians();
                nodes.push(Vec2::new(
                    self.center.x + scale * self.semi_axes.0 * theta.cos(),
                    self.center.y + scale * self.semi_axes.1 * theta.sin(),
                ));
            }
        }

        let mut springs = Vec::new();
        let mut add = |a: usize, b: usize, k: f64, kind: SpringKind| {
            springs.push(Spring {
                a,
                b,
                rest: (nodes[b] - nodes[a]).norm(),
                stiffness: k,
                kind,
            });
        };
        for r in 0..rows {
            for c in 0..cols {
                if c + 1 < cols {
                    add(
                        idx(r, c),
                        idx(r, c + 1),
                        self.structural_stiffness,
                        SpringKind::Structural,
                    );
                }
                if r + 1 < rows {
                    add(
                        idx(r, c),
                        idx(r + 1, c),
                        self.structural_stiffness,
                        SpringKind::Structural,
                    );
                }
                if r + 1 < rows && c + 1 < cols {
                    add(
                        idx(r, c),
                        idx(r + 1, c + 1),
                        self.shear_stiffness,
                        SpringKind::Shear,
                    );
                    add(
                        idx(r, c + 1),
                        idx(r + 1, c),
                        self.shear_stiffness,
                        SpringKind::Shear,
                    );
                }
            }
        }
        // Bending resistance along the outer rows.
        for r in [0, rows - 1] {
            for c in 0..cols.saturating_sub(2) {
                add(
                    idx(r, c),
                    idx(r, c + 2),
                    self.boundary_stiffness,
                    SpringKind::Boundary,
                );
            }
        }

        let bottom = rows - 1;
        let fixed: Vec<usize> = (self.fixed_columns.0..=self.fixed_columns.1)
            .map(|c| idx(bottom, c))
            .collect();
        let anchor = idx(bottom, self.anchor_column);

        let fan = |targets: &[(usize, usize)]| -> Vec<Vec<usize>> {
            targets
                .iter()
                .map(|&(r, c)| vec![anchor, idx(r, c)])
                .collect()
        };
        let ggp_targets = &self.ggp_targets;
        let gga_targets = &self.gga_targets;

        let muscles = vec![
            MuscleGroup {
                muscle: Muscle::Gga,
                fibers: fan(gga_targets),
                max_force: self.max_force,
            },
            MuscleGroup {
                muscle: Muscle::Ggp,
                fibers: fan(ggp_targets),
                max_force: self.max_force,
            },
            MuscleGroup {
                muscle: Muscle::Sl,
                fibers: vec![(0..cols).map(|c| idx(0, c)).collect()],
                max_force: self.max_force,
            },
            MuscleGroup {
                muscle: Muscle::Il,
                fibers: vec![(0..cols).map(|c| idx(bottom, c)).collect()],
                max_force: self.max_force,
            },
        ];

        let mesh = TongueMesh {
            nodes,
            springs,
            fixed,
            columns: cols,
            rows,
        };
        TongueModel::new(mesh, muscles).expect("reference tongue is valid")
    }
}
