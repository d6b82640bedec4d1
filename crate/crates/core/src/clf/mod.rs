//! Compositional logical forms.

mod codec;
mod olf;
mod op;
mod program;
mod validate;

use alloc::string::String;
use alloc::vec::Vec;

pub use codec::{parse_program, serialize_program, ParseError};
pub use olf::{parse_olf, translate_olf_to_clf, OlfOp, OlfProgram, OlfStep, TranslateError};
pub use op::{OperationTag, Qualifier};
pub use program::{
    check_shape, Arg, ClfProgram, ClfStep, ShapeError, StepPath, StructureError, MAX_LITERAL,
};
pub use validate::{
    accepted_dep_types, missing_defaults, result_type, validate, Finding, FindingKind, Severity,
    ValidationReport, ValueType,
};

use crate::scene::split_grounded;

/// True iff the canonical serializations are identical.
pub fn exact_match(a: &ClfProgram, b: &ClfProgram) -> bool {
    serialize_program(a) == serialize_program(b)
}

/// An annotated program in either language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GoldProgram {
    Clf(ClfProgram),
    Olf(OlfProgram),
}

impl From<ClfProgram> for GoldProgram {
    fn from(p: ClfProgram) -> Self {
        GoldProgram::Clf(p)
    }
}

impl From<OlfProgram> for GoldProgram {
    fn from(p: OlfProgram) -> Self {
        GoldProgram::Olf(p)
    }
}

impl GoldProgram {
    /// Parses CLF text, falling back to OLF when the text is not valid CLF.
    /// Shared operation names (`filter`, `find`) make some OLF programs
    /// fail CLF parsing on qualifiers rather than on names.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        match parse_program(text) {
            Ok(p) => Ok(GoldProgram::Clf(p)),
            Err(clf_err) => match parse_olf(text) {
                Ok(p) => Ok(GoldProgram::Olf(p)),
                // An unknown name in CLF points at OLF, so its error is the useful one.
                Err(e)
                    if matches!(clf_err, ParseError::UnknownOperation { .. })
                        && !matches!(e, ParseError::UnknownOperation { .. }) =>
                {
                    Err(e)
                }
                Err(_) => Err(clf_err),
            },
        }
    }

    pub fn to_clf(&self) -> Result<ClfProgram, TranslateError> {
        match self {
            GoldProgram::Clf(p) => Ok(p.clone()),
            GoldProgram::Olf(p) => translate_olf_to_clf(p),
        }
    }

    /// Serialized text in the program's own dialect.
    pub fn to_text(&self) -> String {
        match self {
            GoldProgram::Clf(p) => serialize_program(p),
            GoldProgram::Olf(p) => olf_to_text(p),
        }
    }

    /// Raw `find` mentions, subprograms included, in program order.
    pub fn find_mentions(&self) -> Vec<String> {
        fn clf(steps: &[ClfStep], out: &mut Vec<String>) {
            for s in steps {
                if s.op == OperationTag::Find {
                    out.extend(s.tokens().map(String::from));
                }
                if let Some(sub) = &s.sub {
                    clf(sub, out);
                }
            }
        }
        fn olf(steps: &[OlfStep], out: &mut Vec<String>) {
            for s in steps {
                if s.op == OlfOp::Find {
                    out.extend(s.args.iter().filter_map(Arg::as_token).map(String::from));
                }
                if let Some(sub) = &s.sub {
                    olf(sub, out);
                }
            }
        }
        let mut out = Vec::new();
        match self {
            GoldProgram::Clf(p) => clf(p.steps(), &mut out),
            GoldProgram::Olf(p) => olf(&p.steps, &mut out),
        }
        out
    }

    /// Removes embedded object ids (`bird(775)` -> `bird`) from mentions.
    pub fn strip_object_ids(&self) -> GoldProgram {
        fn strip(args: &mut [Arg]) {
            for a in args {
                if let Arg::Token(t) = a {
                    if let Some((name, _)) = split_grounded(t) {
                        *t = String::from(name);
                    }
                }
            }
        }
        fn clf(steps: &mut [ClfStep]) {
            for s in steps {
                strip(&mut s.args);
                if let Some(sub) = &mut s.sub {
                    clf(sub);
                }
            }
        }
        fn olf(steps: &mut [OlfStep]) {
            for s in steps {
                strip(&mut s.args);
                if let Some(sub) = &mut s.sub {
                    olf(sub);
                }
            }
        }
        match self {
            GoldProgram::Clf(p) => {
                let mut steps = p.clone().into_steps();
                clf(&mut steps);
                // Stripping tokens cannot break dependency structure.
                GoldProgram::Clf(ClfProgram::new(steps).unwrap_or_else(|_| p.clone()))
            }
            GoldProgram::Olf(p) => {
                let mut p = p.clone();
                olf(&mut p.steps);
                GoldProgram::Olf(p)
            }
        }
    }
}

/// JSON text of an OLF program (same shape as CLF, no qualifiers).
pub fn olf_to_text(p: &OlfProgram) -> String {
    use serde_json::{json, Value};
    fn steps(s: &[OlfStep]) -> Value {
        Value::Array(
            s.iter()
                .map(|st| {
                    let args: Vec<Value> = st
                        .args
                        .iter()
                        .map(|a| match a {
                            Arg::Int(n) => json!(n),
                            Arg::Token(t) => json!(t),
                        })
                        .collect();
                    let mut m = serde_json::Map::new();
                    m.insert("op".into(), json!(st.op.as_str()));
                    m.insert("args".into(), Value::Array(args));
                    m.insert("deps".into(), json!(st.deps));
                    if let Some(sub) = &st.sub {
                        m.insert("sub".into(), steps(sub));
                    }
                    Value::Object(m)
                })
                .collect(),
        )
    }
    serde_json::to_string(&steps(&p.steps)).unwrap_or_default()
}
