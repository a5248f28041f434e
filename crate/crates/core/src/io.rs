//! JSON instance files and their parsers.
//!
//! Three document kinds: probing instances, packing instances, and
//! matching instances. Masks are stored as sorted element lists, so the
//! files stay readable and diffable; all semantic validation happens in
//! the domain constructors, so a parsed document is always a valid
//! instance. The `parse_*` functions accept raw bytes and never panic
//! on malformed input — they are also the fuzzing entry points.

use crate::apps::kset::{KSetColumn, KSetInstance, KSetOutcome};
use crate::apps::matching::MatchingInstance;
use crate::matroid::Matroid;
use crate::model::ProbingInstance;
use crate::set::{self, Mask};
use crate::submodular::SubmodularFunction;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

fn mask_to_list(mask: Mask) -> Vec<usize> {
    set::iter(mask).collect()
}

fn list_to_mask(list: &[usize], n: usize, what: &str) -> Result<Mask> {
    let mut mask: Mask = 0;
    for &e in list {
        if e >= n {
            return Err(Error::Parse(format!("{what}: element {e} outside 0..{n}")));
        }
        mask |= set::bit(e);
    }
    Ok(mask)
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum MatroidDoc {
    Transversal {
        vertices: usize,
        edges: Vec<(usize, usize)>,
    },
    Uniform {
        subset: Vec<usize>,
        rank: usize,
    },
    Partition {
        blocks: Vec<PartitionBlockDoc>,
    },
    Enumerated {
        independent: Vec<Vec<usize>>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartitionBlockDoc {
    members: Vec<usize>,
    cap: usize,
}

fn matroid_to_doc(m: &Matroid) -> MatroidDoc {
    match m {
        Matroid::Transversal { vertices, adj, .. } => MatroidDoc::Transversal {
            vertices: *vertices,
            edges: adj
                .iter()
                .enumerate()
                .flat_map(|(e, &vs)| set::iter(vs).map(move |v| (e, v)))
                .collect(),
        },
        Matroid::Uniform { subset, rank, .. } => MatroidDoc::Uniform {
            subset: mask_to_list(*subset),
            rank: *rank,
        },
        Matroid::Partition { blocks, .. } => MatroidDoc::Partition {
            blocks: blocks
                .iter()
                .map(|&(members, cap)| PartitionBlockDoc {
                    members: mask_to_list(members),
                    cap,
                })
                .collect(),
        },
        Matroid::Enumerated { family, .. } => MatroidDoc::Enumerated {
            independent: family.iter().map(|&s| mask_to_list(s)).collect(),
        },
    }
}

fn doc_to_matroid(doc: &MatroidDoc, n: usize) -> Result<Matroid> {
    match doc {
        MatroidDoc::Transversal { vertices, edges } => Matroid::transversal(n, *vertices, edges),
        MatroidDoc::Uniform { subset, rank } => {
            Matroid::uniform(n, list_to_mask(subset, n, "uniform subset")?, *rank)
        }
        MatroidDoc::Partition { blocks } => Matroid::partition(
            n,
            blocks
                .iter()
                .map(|b| Ok((list_to_mask(&b.members, n, "partition block")?, b.cap)))
                .collect::<Result<Vec<_>>>()?,
        ),
        MatroidDoc::Enumerated { independent } => {
            if n > 16 {
                return Err(Error::Parse(format!(
                    "enumerated matroid over {n} elements refused"
                )));
            }
            let family = independent
                .iter()
                .map(|s| list_to_mask(s, n, "independent set"))
                .collect::<Result<Vec<_>>>()?;
            Matroid::enumerated(n, family)
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum ObjectiveDoc {
    Linear {
        weights: Vec<f64>,
    },
    Coverage {
        item_weights: Vec<f64>,
        covers: Vec<Vec<usize>>,
    },
    CutDirected {
        arcs: Vec<(usize, usize, f64)>,
    },
    CutUndirected {
        edges: Vec<(usize, usize, f64)>,
    },
    Table {
        values: Vec<f64>,
    },
}

fn objective_to_doc(f: &SubmodularFunction) -> ObjectiveDoc {
    match f {
        SubmodularFunction::Linear { weights } => ObjectiveDoc::Linear {
            weights: weights.clone(),
        },
        SubmodularFunction::Coverage {
            item_weights,
            covers,
            ..
        } => ObjectiveDoc::Coverage {
            item_weights: item_weights.clone(),
            covers: covers.iter().map(|&c| mask_to_list(c)).collect(),
        },
        SubmodularFunction::DirectedCut { arcs, .. } => ObjectiveDoc::CutDirected {
            arcs: arcs.clone(),
        },
        SubmodularFunction::UndirectedCut { edges, .. } => ObjectiveDoc::CutUndirected {
            edges: edges.clone(),
        },
        SubmodularFunction::Table { values, .. } => ObjectiveDoc::Table {
            values: values.clone(),
        },
    }
}

fn doc_to_objective(doc: &ObjectiveDoc, n: usize) -> Result<SubmodularFunction> {
    match doc {
        ObjectiveDoc::Linear { weights } => {
            if weights.len() != n {
                return Err(Error::Parse("objective weight length mismatch".into()));
            }
            SubmodularFunction::linear(weights.clone())
        }
        ObjectiveDoc::Coverage {
            item_weights,
            covers,
        } => {
            if covers.len() != n {
                return Err(Error::Parse("coverage cover-list length mismatch".into()));
            }
            let items = item_weights.len();
            let masks = covers
                .iter()
                .map(|c| list_to_mask(c, items.max(1), "cover"))
                .collect::<Result<Vec<_>>>()?;
            SubmodularFunction::coverage(n, item_weights.clone(), masks)
        }
        ObjectiveDoc::CutDirected { arcs } => SubmodularFunction::cut_directed(n, arcs.clone()),
        ObjectiveDoc::CutUndirected { edges } => {
            SubmodularFunction::cut_undirected(n, edges.clone())
        }
        ObjectiveDoc::Table { values } => SubmodularFunction::table(n, values.clone()),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProbingInstanceDoc {
    /// Activation probabilities; the element order is also the pruning
    /// order used by the virtual-decision replay.
    p: Vec<f64>,
    inner: Vec<MatroidDoc>,
    outer: Vec<MatroidDoc>,
    objective: ObjectiveDoc,
}

/// Parse a probing instance document. Never panics; malformed bytes
/// yield a parse or domain error.
pub fn parse_probing_instance(bytes: &[u8]) -> Result<ProbingInstance> {
    let doc: ProbingInstanceDoc =
        serde_json::from_slice(bytes).map_err(|e| Error::Parse(e.to_string()))?;
    let n = doc.p.len();
    if n == 0 || n > 64 {
        return Err(Error::Parse(format!("{n} elements outside 1..=64")));
    }
    if doc.inner.len() + doc.outer.len() > 8 {
        return Err(Error::Parse("more than 8 constraint matroids refused".into()));
    }
    let inner = doc
        .inner
        .iter()
        .map(|m| doc_to_matroid(m, n))
        .collect::<Result<Vec<_>>>()?;
    let outer = doc
        .outer
        .iter()
        .map(|m| doc_to_matroid(m, n))
        .collect::<Result<Vec<_>>>()?;
    let objective = doc_to_objective(&doc.objective, n)?;
    ProbingInstance::new(doc.p, inner, outer, objective)
}

/// Serialize a probing instance to pretty JSON.
pub fn write_probing_instance(instance: &ProbingInstance) -> Result<String> {
    let doc = ProbingInstanceDoc {
        p: instance.p.clone(),
        inner: instance.inner.iter().map(matroid_to_doc).collect(),
        outer: instance.outer.iter().map(matroid_to_doc).collect(),
        objective: objective_to_doc(&instance.objective),
    };
    serde_json::to_string_pretty(&doc).map_err(|e| Error::Parse(e.to_string()))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KSetOutcomeDoc {
    prob: f64,
    value: f64,
    units: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KSetColumnDoc {
    support: Vec<usize>,
    outcomes: Vec<KSetOutcomeDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KSetInstanceDoc {
    coordinates: usize,
    capacities: Vec<usize>,
    columns: Vec<KSetColumnDoc>,
}

/// Parse a packing instance document.
pub fn parse_kset_instance(bytes: &[u8]) -> Result<KSetInstance> {
    let doc: KSetInstanceDoc =
        serde_json::from_slice(bytes).map_err(|e| Error::Parse(e.to_string()))?;
    let d = doc.coordinates;
    if d == 0 || d > 64 {
        return Err(Error::Parse(format!("{d} coordinates outside 1..=64")));
    }
    let columns = doc
        .columns
        .iter()
        .map(|c| {
            Ok(KSetColumn {
                support: list_to_mask(&c.support, d, "column support")?,
                outcomes: c
                    .outcomes
                    .iter()
                    .map(|o| {
                        Ok(KSetOutcome {
                            prob: o.prob,
                            value: o.value,
                            units: list_to_mask(&o.units, d, "outcome units")?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    KSetInstance::new(d, doc.capacities, columns)
}

/// Serialize a packing instance to pretty JSON.
pub fn write_kset_instance(instance: &KSetInstance) -> Result<String> {
    let doc = KSetInstanceDoc {
        coordinates: instance.d,
        capacities: instance.capacities.clone(),
        columns: instance
            .columns
            .iter()
            .map(|c| KSetColumnDoc {
                support: mask_to_list(c.support),
                outcomes: c
                    .outcomes
                    .iter()
                    .map(|o| KSetOutcomeDoc {
                        prob: o.prob,
                        value: o.value,
                        units: mask_to_list(o.units),
                    })
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).map_err(|e| Error::Parse(e.to_string()))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatchingEdgeDoc {
    a: usize,
    b: usize,
    p: f64,
    w: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatchingInstanceDoc {
    /// Patience per A-side node.
    patience_a: Vec<u32>,
    /// Patience per B-side node.
    patience_b: Vec<u32>,
    edges: Vec<MatchingEdgeDoc>,
}

/// Parse a matching instance document.
pub fn parse_matching_instance(bytes: &[u8]) -> Result<MatchingInstance> {
    let doc: MatchingInstanceDoc =
        serde_json::from_slice(bytes).map_err(|e| Error::Parse(e.to_string()))?;
    let edges: Vec<(usize, usize)> = doc.edges.iter().map(|e| (e.a, e.b)).collect();
    let p = doc.edges.iter().map(|e| e.p).collect();
    let w = doc.edges.iter().map(|e| e.w).collect();
    MatchingInstance::new(
        doc.patience_a.len(),
        doc.patience_b.len(),
        edges,
        p,
        w,
        doc.patience_a,
        doc.patience_b,
    )
}

/// Serialize a matching instance to pretty JSON.
pub fn write_matching_instance(instance: &MatchingInstance) -> Result<String> {
    let doc = MatchingInstanceDoc {
        patience_a: instance.t_a.clone(),
        patience_b: instance.t_b.clone(),
        edges: (0..instance.n_edges())
            .map(|e| MatchingEdgeDoc {
                a: instance.edges[e].0,
                b: instance.edges[e].1,
                p: instance.p[e],
                w: instance.w[e],
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).map_err(|e| Error::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{self, InstanceSpec, ObjectiveFamily};
    use crate::model::RandomSource;

    #[test]
    fn probing_instances_round_trip() {
        let mut rng = RandomSource::new(61).rng();
        for trial in 0..20 {
            let spec = InstanceSpec::new(
                3 + trial % 4,
                1 + trial % 2,
                trial % 2,
                match trial % 4 {
                    0 => ObjectiveFamily::Linear,
                    1 => ObjectiveFamily::Coverage,
                    2 => ObjectiveFamily::DirectedCut,
                    _ => ObjectiveFamily::MixedTable,
                },
            );
            let inst = gen::random_instance(&spec, &mut rng).unwrap();
            let text = write_probing_instance(&inst).unwrap();
            let back = parse_probing_instance(text.as_bytes()).unwrap();
            assert_eq!(back.p, inst.p);
            assert_eq!(back.inner.len(), inst.inner.len());
            assert_eq!(back.outer.len(), inst.outer.len());
            for s in 0..(1u64 << inst.n()) {
                assert_eq!(back.objective.value(s), inst.objective.value(s));
                for m in 0..inst.inner.len() {
                    assert_eq!(
                        back.inner[m].is_independent(s).unwrap(),
                        inst.inner[m].is_independent(s).unwrap()
                    );
                }
                for m in 0..inst.outer.len() {
                    assert_eq!(
                        back.outer[m].is_independent(s).unwrap(),
                        inst.outer[m].is_independent(s).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn kset_instances_round_trip() {
        let mut rng = RandomSource::new(62).rng();
        for _ in 0..20 {
            let inst = gen::random_kset(5, 4, 2, &mut rng).unwrap();
            let text = write_kset_instance(&inst).unwrap();
            let back = parse_kset_instance(text.as_bytes()).unwrap();
            assert_eq!(back.d, inst.d);
            assert_eq!(back.capacities, inst.capacities);
            assert_eq!(back.n(), inst.n());
            for (ca, cb) in back.columns.iter().zip(&inst.columns) {
                assert_eq!(ca.support, cb.support);
                assert_eq!(ca.outcomes.len(), cb.outcomes.len());
            }
        }
    }

    #[test]
    fn matching_instances_round_trip() {
        let mut rng = RandomSource::new(63).rng();
        for _ in 0..20 {
            let inst = gen::random_matching(3, 3, 7, &mut rng).unwrap();
            let text = write_matching_instance(&inst).unwrap();
            let back = parse_matching_instance(text.as_bytes()).unwrap();
            assert_eq!(back.edges, inst.edges);
            assert_eq!(back.p, inst.p);
            assert_eq!(back.w, inst.w);
            assert_eq!(back.t_a, inst.t_a);
            assert_eq!(back.t_b, inst.t_b);
        }
    }

    #[test]
    fn parsers_reject_garbage_without_panicking() {
        for bytes in [
            &b""[..],
            &b"{}"[..],
            &b"[1,2,3]"[..],
            &b"{\"p\": []}"[..],
            &b"{\"p\": [2.0], \"inner\": [], \"outer\": [], \"objective\": {\"kind\": \"linear\", \"weights\": [1.0]}}"[..],
            "{\"p\": [0.5], \"inner\": [{\"kind\": \"uniform\", \"subset\": [9], \"rank\": 1}], \"outer\": [], \"objective\": {\"kind\": \"linear\", \"weights\": [1.0]}}".as_bytes(),
        ] {
            assert!(parse_probing_instance(bytes).is_err());
            assert!(parse_kset_instance(bytes).is_err());
            assert!(parse_matching_instance(bytes).is_err());
        }
    }

    #[test]
    fn fixed_document_parses_to_the_expected_instance() {
        let text = r#"{
            "p": [0.5, 1.0],
            "inner": [{"kind": "uniform", "subset": [0, 1], "rank": 1}],
            "outer": [],
            "objective": {"kind": "linear", "weights": [1.0, 2.0]}
        }"#;
        let inst = parse_probing_instance(text.as_bytes()).unwrap();
        assert_eq!(inst.n(), 2);
        assert_eq!(inst.k_in(), 1);
        assert_eq!(inst.objective.value(0b11), 3.0);
    }
}
