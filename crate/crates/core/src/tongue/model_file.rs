//! Text model files:
//!
//! ```text
//! grid <columns> <rows>
//! node <x> <y>                      # row-major, row 0 = surface, col 0 = tip
//! fixed <i> [<j> ...]
//! spring <a> <b> <rest> <stiffness> [structural|shear|boundary]
//! muscle <GGA|GGP|SL|IL> <max_force>
//! fiber <GGA|GGP|SL|IL> <i0> <i1> [...]
//! ```

use std::fmt::Write as _;

use super::{MuscleGroup, Spring, SpringKind, TongueError, TongueMesh, TongueModel};
use crate::geom::Vec2;
use crate::gesture::Muscle;

pub fn write_model(model: &TongueModel) -> String {
    let mesh = &model.mesh;
    let mut out = String::from("# vtforge tongue model\n");
    let _ = writeln!(out, "grid {} {}", mesh.columns, mesh.rows);
    for p in &mesh.nodes {
        let _ = writeln!(out, "node {} {}", p.x, p.y);
    }
    let fixed: Vec<String> = mesh.fixed.iter().map(|i| i.to_string()).collect();
    let _ = writeln!(out, "fixed {}", fixed.join(" "));
    for s in &mesh.springs {
        let _ = writeln!(
            out,
            "spring {} {} {} {} {}",
            s.a,
            s.b,
            s.rest,
            s.stiffness,
            s.kind.name()
        );
    }
    for g in &model.muscles {
        let _ = writeln!(out, "muscle {} {}", g.muscle, g.max_force);
        for chain in &g.fibers {
            let ids: Vec<String> = chain.iter().map(|i| i.to_string()).collect();
            let _ = writeln!(out, "fiber {} {}", g.muscle, ids.join(" "));
        }
    }
    out
}

pub fn parse_model(text: &str) -> Result<TongueModel, TongueError> {
    let mut grid: Option<(usize, usize)> = None;
    let mut nodes = Vec::new();
    let mut fixed = Vec::new();
    let mut springs = Vec::new();
    let mut groups: Vec<MuscleGroup> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| TongueError::Parse { line, message };
        let content = raw.split('#').next().unwrap_or("");
        let mut tok = content.split_whitespace();
        let Some(keyword) = tok.next() else { continue };
        let rest: Vec<&str> = tok.collect();
        let num = |s: &str| -> Result<f64, TongueError> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(format!("bad number {s:?}")))
        };
        let index = |s: &str| -> Result<usize, TongueError> {
            s.parse::<usize>()
                .map_err(|_| err(format!("bad index {s:?}")))
        };
        let muscle = |s: &str| -> Result<Muscle, TongueError> {
            Muscle::from_name(s).ok_or_else(|| err(format!("unknown muscle {s:?}")))
        };
        match keyword {
            "grid" => {
                if rest.len() != 2 {
                    return Err(err("grid needs <columns> <rows>".into()));
                }
                grid = Some((index(rest[0])?, index(rest[1])?));
            }
            "node" => {
                if rest.len() != 2 {
                    return Err(err("node needs <x> <y>".into()));
                }
                nodes.push(Vec2::new(num(rest[0])?, num(rest[1])?));
            }
            "fixed" => {
                for s in rest {
                    fixed.push(index(s)?);
                }
            }
            "spring" => {
                if !(4..=5).contains(&rest.len()) {
                    return Err(err("spring needs <a> <b> <rest> <stiffness> [kind]".into()));
                }
                let kind = match rest.get(4).copied() {
                    None | Some("structural") => SpringKind::Structural,
                    Some("shear") => SpringKind::Shear,
                    Some("boundary") => SpringKind::Boundary,
                    Some(other) => return Err(err(format!("unknown spring kind {other:?}"))),
                };
                springs.push(Spring {
                    a: index(rest[0])?,
                    b: index(rest[1])?,
                    rest: num(rest[2])?,
                    stiffness: num(rest[3])?,
                    kind,
                });
            }
            "muscle" => {
                if rest.len() != 2 {
                    return Err(err("muscle needs <id> <max_force>".into()));
                }
                let m = muscle(rest[0])?;
                if groups.iter().any(|g| g.muscle == m) {
                    return Err(err(format!("muscle {m} declared twice")));
                }
                groups.push(MuscleGroup {
                    muscle: m,
                    fibers: Vec::new(),
                    max_force: num(rest[1])?,
                });
            }
            "fiber" => {
                if rest.len() < 3 {
                    return Err(err("fiber needs <id> and at least two nodes".into()));
                }
                let m = muscle(rest[0])?;
                let chain = rest[1..]
                    .iter()
                    .map(|s| index(s))
                    .collect::<Result<Vec<_>, _>>()?;
                let group = groups
                    .iter_mut()
                    .find(|g| g.muscle == m)
                    .ok_or_else(|| err(format!("fiber for undeclared muscle {m}")))?;
                group.fibers.push(chain);
            }
            other => return Err(err(format!("unknown keyword {other:?}"))),
        }
    }

    let (columns, rows) = grid.ok_or(TongueError::Parse {
        line: 0,
        message: "missing grid line".into(),
    })?;
    let mesh = TongueMesh {
        nodes,
        springs,
        fixed,
        columns,
        rows,
    };
    TongueModel::new(mesh, groups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tongue::build_reference_tongue;

    #[test]
    fn reference_round_trips_exactly() {
        let (model, _) = build_reference_tongue();
        let text = write_model(&model);
        assert_eq!(parse_model(&text).unwrap(), model);
    }

    #[test]
    fn reports_bad_lines() {
        let (model, _) = build_reference_tongue();
        let text = write_model(&model).replace("muscle SL", "muscle XX");
        assert!(matches!(parse_model(&text), Err(TongueError::Parse { .. })));
        let text = write_model(&model).replacen("node ", "node x", 1);
        assert!(matches!(
            parse_model(&text),
            Err(TongueError::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn missing_muscle_rejected() {
        let (model, _) = build_reference_tongue();
        let text: String = write_model(&model)
            .lines()
            .filter(|l| !l.contains(" IL "))
            .map(|l| format!("{l}\n"))
            .collect();
        assert!(matches!(
            parse_model(&text),
            Err(TongueError::InvalidModel(_))
        ));
    }

    #[test]
    fn disconnected_mesh_rejected() {
        let (model, _) = build_reference_tongue();
        let text: String = write_model(&model)
            .lines()
            .filter(|l| !l.starts_with("spring"))
            .map(|l| format!("{l}\n"))
            .collect();
        assert!(matches!(
            parse_model(&text),
            Err(TongueError::InvalidModel(_))
        ));
    }
}
