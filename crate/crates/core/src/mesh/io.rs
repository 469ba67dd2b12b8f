//! Plain-text mesh grammar.
//!
//! ```text
//! # comments and blank lines are ignored
//! NODES <n>
//! <id> <x> <y> <z>          (n lines, ids unique positive integers)
//! ELEMS <m>
//! <id> <n1> ... <n8>        (m lines, node file-ids)
//! NSET <name> <k>
//! <node-id> ...             (k ids, whitespace separated, any line breaks)
//! ESET <name> <k>
//! <elem-id> ...             (k ids)
//! ```
//!
//! File ids may be arbitrary; internal indices follow order of appearance.
//! The writer emits sequential 1-based ids, eight ids per set line, and
//! round-trips any mesh to an identical structure.

use std::collections::BTreeMap;
use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{CoreError, Result};
use crate::mesh::Mesh;

/// Token stream with line tracking for error messages.
struct Tokens<'a> {
    toks: Vec<(usize, &'a str)>,
    pos: usize,
    last_line: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let mut toks = Vec::new();
        let mut last_line = 1;
        for (i, line) in text.lines().enumerate() {
            let body = line.split('#').next().unwrap_or("");
            for t in body.split_whitespace() {
                toks.push((i + 1, t));
            }
            last_line = i + 1;
        }
        Tokens {
            toks,
            pos: 0,
            last_line,
        }
    }

    fn peek(&self) -> Option<(usize, &'a str)> {
        self.toks.get(self.pos).copied()
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let t = self.toks.get(self.pos).copied().ok_or(CoreError::Parse {
            line: self.last_line,
            msg: format!("unexpected end of file, expected {what}"),
        })?;
        self.pos += 1;
        Ok(t)
    }

    fn next_usize(&mut self, what: &str) -> Result<(usize, usize)> {
        let (line, t) = self.next(what)?;
        let v = t.parse().map_err(|_| CoreError::Parse {
            line,
            msg: format!("expected {what} (an unsigned integer), got `{t}`"),
        })?;
        Ok((line, v))
    }

    fn next_f64(&mut self, what: &str) -> Result<f64> {
        let (line, t) = self.next(what)?;
        t.parse().map_err(|_| CoreError::Parse {
            line,
            msg: format!("expected {what} (a number), got `{t}`"),
        })
    }
}

/// Parse the mesh grammar and verify all mesh invariants.
pub fn parse_mesh(text: &str) -> Result<Mesh> {
    let mut toks = Tokens::new(text);
    let mut coords = Vec::new();
    let mut elems = Vec::new();
    let mut node_sets = BTreeMap::new();
    let mut elem_sets = BTreeMap::new();
    let mut node_ids: HashMap<usize, usize> = HashMap::new();
    let mut elem_ids: HashMap<usize, usize> = HashMap::new();

    while let Some((line, kw)) = toks.peek() {
        toks.pos += 1;
        match kw {
            "NODES" => {
                let (_, n) = toks.next_usize("node count")?;
                for _ in 0..n {
                    let (id_line, id) = toks.next_usize("node id")?;
                    let x = toks.next_f64("x coordinate")?;
                    let y = toks.next_f64("y coordinate")?;
                    let z = toks.next_f64("z coordinate")?;
                    if node_ids.insert(id, coords.len()).is_some() {
                        return Err(CoreError::Parse {
                            line: id_line,
                            msg: format!("duplicate node id {id}"),
                        });
                    }
                    coords.push([x, y, z]);
                }
            }
            "ELEMS" => {
                let (_, m) = toks.next_usize("element count")?;
                for _ in 0..m {
                    let (id_line, id) = toks.next_usize("element id")?;
                    let mut conn = [0usize; 8];
                    for c in conn.iter_mut() {
                        let (nline, nid) = toks.next_usize("node id in connectivity")?;
                        *c = *node_ids.get(&nid).ok_or(CoreError::Parse {
                            line: nline,
                            msg: format!("element {id} references unknown node id {nid}"),
                        })?;
                    }
                    if elem_ids.insert(id, elems.len()).is_some() {
                        return Err(CoreError::Parse {
                            line: id_line,
                            msg: format!("duplicate element id {id}"),
                        });
                    }
                    elems.push(conn);
                }
            }
            "NSET" | "ESET" => {
                let (nline, name) = toks.next("set name")?;
                let (_, k) = toks.next_usize("set size")?;
                let mut ids = Vec::with_capacity(k);
                let (table, kind): (&HashMap<usize, usize>, &str) = if kw == "NSET" {
                    (&node_ids, "node")
                } else {
                    (&elem_ids, "element")
                };
                for _ in 0..k {
                    let (iline, id) = toks.next_usize(&format!("{kind} id in set `{name}`"))?;
                    ids.push(*table.get(&id).ok_or(CoreError::Parse {
                        line: iline,
                        msg: format!("set `{name}` references unknown {kind} id {id}"),
                    })?);
                }
                ids.sort_unstable();
                ids.dedup();
                let target = if kw == "NSET" {
                    &mut node_sets
                } else {
                    &mut elem_sets
                };
                if target.insert(name.to_string(), ids).is_some() {
                    return Err(CoreError::Parse {
                        line: nline,
                        msg: format!("duplicate set name `{name}`"),
                    });
                }
            }
            other => {
                return Err(CoreError::Parse {
                    line,
                    msg: format!(
                        "unknown keyword `{other}` (expected NODES, ELEMS, NSET or ESET)"
                    ),
                })
            }
        }
    }

    let mesh = Mesh {
        coords,
        elems,
        node_sets,
        elem_sets,
    };
    mesh.validate()?;
    Ok(mesh)
}

/// Serialise a mesh to the grammar with sequential 1-based ids.
pub fn write_mesh(mesh: &Mesh) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "NODES {}", mesh.n_nodes());
    for (i, c) in mesh.coords.iter().enumerate() {
        let _ = writeln!(out, "{} {:.17e} {:.17e} {:.17e}", i + 1, c[0], c[1], c[2]);
    }
    let _ = writeln!(out, "ELEMS {}", mesh.n_elems());
    for (e, conn) in mesh.elems.iter().enumerate() {
        let _ = write!(out, "{}", e + 1);
        for &n in conn {
            let _ = write!(out, " {}", n + 1);
        }
        out.push('\n');
    }
    for (name, ids) in &mesh.node_sets {
        let _ = writeln!(out, "NSET {} {}", name, ids.len());
        write_id_block(&mut out, ids);
    }
    for (name, ids) in &mesh.elem_sets {
        let _ = writeln!(out, "ESET {} {}", name, ids.len());
        write_id_block(&mut out, ids);
    }
    out
}

fn write_id_block(out: &mut String, ids: &[usize]) {
    for chunk in ids.chunks(8) {
        let line: Vec<String> = chunk.iter().map(|&i| (i + 1).to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
}
