//! On-disk documents: game files, scheme files and target files.

use std::fmt;
use std::marker::PhantomData;

use payscheme_core::synthesis::CostVector;
use payscheme_core::{GameTree, InfoStructure, Matrix, NodeKind, NodeSpec, PaymentScheme, StrategyProfile};
use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::error::{CliError, CliResult};
use crate::json::{nums, rows};

/// String-keyed map that keeps document order and rejects duplicate keys.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Ordered<V>(pub Vec<(String, V)>);

impl<V: Serialize> Serialize for Ordered<V> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl<'de, V: Deserialize<'de>> Deserialize<'de> for Ordered<V> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct OrderedVisitor<V>(PhantomData<V>);

        impl<'de, V: Deserialize<'de>> Visitor<'de> for OrderedVisitor<V> {
            type Value = Ordered<V>;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a JSON object")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Self::Value, A::Error> {
                let mut out: Vec<(String, V)> = Vec::new();
                while let Some((k, v)) = access.next_entry::<String, V>()? {
                    if out.iter().any(|(seen, _)| *seen == k) {
                        return Err(serde::de::Error::custom(format!("duplicate key `{k}`")));
                    }
                    out.push((k, v));
                }
                Ok(Ordered(out))
            }
        }

        d.deserialize_map(OrderedVisitor(PhantomData))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OwnerRef {
    Index(usize),
    Name(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeDoc {
    Branch(BranchDoc),
    Chance(ChanceDoc),
    Leaf(LeafDoc),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchDoc {
    pub id: String,
    pub owner: OwnerRef,
    pub children: Ordered<NodeDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChanceDoc {
    pub id: String,
    pub children: Vec<Outcome>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outcome {
    pub p: f64,
    pub node: NodeDoc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeafDoc {
    pub id: String,
    pub utilities: Vec<f64>,
    pub emission: Vec<f64>,
}

/// A cost entry: a number or the token `"inf"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CostEntry {
    Finite(f64),
    Token(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameFile {
    pub players: Vec<String>,
    pub alphabet: Vec<String>,
    pub tree: NodeDoc,
    #[serde(default)]
    pub intended: Ordered<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub costs: Option<Vec<Vec<CostEntry>>>,
}

/// A parsed and validated game file.
#[derive(Clone, Debug, PartialEq)]
pub struct Game {
    pub tree: GameTree,
    pub info: InfoStructure,
    pub intended: StrategyProfile,
    pub costs: Option<CostVector>,
}

impl Game {
    pub fn new(tree: GameTree, info: InfoStructure, intended: StrategyProfile) -> Self {
        Game {
            tree,
            info,
            intended,
            costs: None,
        }
    }

    /// Costs from the file, or 1 everywhere.
    pub fn costs_or_unit(&self) -> CostVector {
        self.costs
            .clone()
            .unwrap_or_else(|| CostVector::unit(self.tree.num_players(), self.info.num_symbols()))
    }

    /// Branch ids in preorder, for emitting profiles in a fixed order.
    pub fn ordered_profile(&self, profile: &StrategyProfile) -> Value {
        let mut map = serde_json::Map::new();
        for id in self.tree.branch_ids() {
            if let Some(action) = profile.get(id) {
                map.insert(id.to_string(), Value::String(action.to_string()));
            }
        }
        Value::Object(map)
    }

    pub fn player_name(&self, i: usize) -> &str {
        &self.tree.players()[i]
    }

    pub fn leaf_id(&self, leaf: usize) -> &str {
        &self.tree.node(self.tree.leaf_nodes()[leaf]).id
    }
}

fn node_spec(doc: NodeDoc, players: &[String]) -> CliResult<NodeSpec> {
    Ok(match doc {
        NodeDoc::Branch(b) => {
            let owner = match b.owner {
                OwnerRef::Index(i) if i < players.len() => i,
                OwnerRef::Index(i) => {
                    return Err(CliError::input(format!("branch `{}`: owner index {i} out of range", b.id)))
                }
                OwnerRef::Name(name) => players
                    .iter()
                    .position(|p| *p == name)
                    .ok_or_else(|| CliError::input(format!("branch `{}`: unknown owner `{name}`", b.id)))?,
            };
            let moves = b
                .children
                .0
                .into_iter()
                .map(|(m, child)| Ok((m, node_spec(child, players)?)))
                .collect::<CliResult<Vec<_>>>()?;
            NodeSpec::Branch { id: b.id, owner, moves }
        }
        NodeDoc::Chance(c) => NodeSpec::Chance {
            id: c.id,
            outcomes: c
                .children
                .into_iter()
                .map(|o| Ok((o.p, node_spec(o.node, players)?)))
                .collect::<CliResult<Vec<_>>>()?,
        },
        NodeDoc::Leaf(l) => NodeSpec::Leaf {
            id: l.id,
            utilities: l.utilities,
            emission: l.emission,
        },
    })
}

fn node_doc(spec: NodeSpec, players: &[String]) -> NodeDoc {
    match spec {
        NodeSpec::Branch { id, owner, moves } => NodeDoc::Branch(BranchDoc {
            id,
            owner: OwnerRef::Name(players[owner].clone()),
            children: Ordered(moves.into_iter().map(|(m, c)| (m, node_doc(c, players))).collect()),
        }),
        NodeSpec::Chance { id, outcomes } => NodeDoc::Chance(ChanceDoc {
            id,
            children: outcomes
                .into_iter()
                .map(|(p, c)| Outcome {
                    p,
                    node: node_doc(c, players),
                })
                .collect(),
        }),
        NodeSpec::Leaf {
            id,
            utilities,
            emission,
        } => NodeDoc::Leaf(LeafDoc {
            id,
            utilities,
            emission,
        }),
    }
}

impl GameFile {
    pub fn parse(text: &str, what: &str) -> CliResult<GameFile> {
        serde_json::from_str(text).map_err(|source| CliError::Json {
            what: what.to_string(),
            source,
        })
    }

    pub fn into_game(self) -> CliResult<Game> {
        let GameFile {
            players,
            alphabet,
            tree,
            intended,
            costs,
        } = self;
        if players.is_empty() {
            return Err(CliError::input("game has no players"));
        }
        let root = node_spec(tree, &players)?;
        let tree = GameTree::new(players, alphabet.len(), root)?;
        let info = InfoStructure::from_tree(&tree, alphabet)?;

        let mut profile = StrategyProfile::new();
        for (branch, action) in intended.0 {
            let v = tree.node_index(&branch)?;
            match &tree.node(v).kind {
                NodeKind::Branch { moves, .. } if moves.iter().any(|(m, _)| *m == action) => {}
                NodeKind::Branch { .. } => {
                    return Err(payscheme_core::Error::UnknownMove { node: branch, action }.into())
                }
                _ => return Err(CliError::input(format!("intended move given for non-branch `{branch}`"))),
            }
            profile.insert(branch, action);
        }

        let costs = match costs {
            None => None,
            Some(table) => Some(parse_costs(&table, tree.num_players(), info.num_symbols())?),
        };
        Ok(Game {
            tree,
            info,
            intended: profile,
            costs,
        })
    }

    pub fn from_game(game: &Game) -> GameFile {
        let players = game.tree.players().to_vec();
        let intended = game
            .tree
            .branch_ids()
            .filter_map(|id| game.intended.get(id).map(|a| (id.to_string(), a.to_string())))
            .collect();
        let costs = game.costs.as_ref().map(|c| {
            (0..c.players())
                .map(|i| {
                    (0..c.symbols())
                        .map(|k| match c.get(i, k) {
                            Some(v) => CostEntry::Finite(v),
                            None => CostEntry::Token("inf".into()),
                        })
                        .collect()
                })
                .collect()
        });
        GameFile {
            tree: node_doc(game.tree.to_spec(game.tree.root()), &players),
            players,
            alphabet: game.info.alphabet().to_vec(),
            intended: Ordered(intended),
            costs,
        }
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("game files hold finite numbers")
    }
}

fn parse_costs(table: &[Vec<CostEntry>], players: usize, symbols: usize) -> CliResult<CostVector> {
    if table.len() != players || table.iter().any(|r| r.len() != symbols) {
        return Err(CliError::input(format!("costs must be a {players} x {symbols} array")));
    }
    let mut entries = Vec::with_capacity(players * symbols);
    for row in table {
        for e in row {
            entries.push(match e {
                CostEntry::Finite(v) => Some(*v),
                CostEntry::Token(t) if t == "inf" => None,
                CostEntry::Token(t) => return Err(CliError::input(format!("unknown cost token `{t}`"))),
            });
        }
    }
    Ok(CostVector::new(players, symbols, entries)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeFile {
    pub alphabet: Vec<String>,
    pub lambda: Vec<Vec<f64>>,
    #[serde(default)]
    pub max_deposits: Vec<f64>,
}

impl SchemeFile {
    pub fn new(alphabet: &[String], scheme: &PaymentScheme) -> Self {
        SchemeFile {
            alphabet: alphabet.to_vec(),
            lambda: scheme.matrix().to_rows(),
            max_deposits: scheme.max_deposits(),
        }
    }

    pub fn parse(text: &str, what: &str) -> CliResult<SchemeFile> {
        serde_json::from_str(text).map_err(|source| CliError::Json {
            what: what.to_string(),
            source,
        })
    }

    /// The scheme, checked against the game's players and alphabet.
    pub fn scheme_for(&self, game: &Game) -> CliResult<PaymentScheme> {
        if self.alphabet != game.info.alphabet() {
            return Err(CliError::input(format!(
                "scheme alphabet {:?} differs from game alphabet {:?}",
                self.alphabet,
                game.info.alphabet()
            )));
        }
        let n = game.tree.num_players();
        if self.lambda.len() != n {
            return Err(CliError::input(format!(
                "scheme has {} rows, game has {n} players",
                self.lambda.len()
            )));
        }
        Ok(PaymentScheme::new(Matrix::from_rows(&self.lambda)?)?)
    }

    /// Object with the scheme fields first, ready for extra report fields.
    pub fn to_map(&self) -> serde_json::Map<String, Value> {
        let mut map = serde_json::Map::new();
        map.insert("alphabet".into(), serde_json::json!(self.alphabet));
        map.insert(
            "lambda".into(),
            Value::Array(self.lambda.iter().map(|r| nums(r)).collect()),
        );
        map.insert("max_deposits".into(), nums(&self.max_deposits));
        map
    }
}

/// A target matrix, either bare or as `{"target": [...]}`.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum TargetFile {
    Wrapped { target: Vec<Vec<f64>> },
    Bare(Vec<Vec<f64>>),
}

impl TargetFile {
    pub fn parse(text: &str, what: &str) -> CliResult<Matrix> {
        let doc: TargetFile = serde_json::from_str(text).map_err(|source| CliError::Json {
            what: what.to_string(),
            source,
        })?;
        let rows = match doc {
            TargetFile::Wrapped { target } | TargetFile::Bare(target) => target,
        };
        Ok(Matrix::from_rows(&rows)?)
    }

    pub fn to_value(target: &Matrix) -> Value {
        serde_json::json!({ "target": rows(target) })
    }
}
