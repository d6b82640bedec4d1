use alloc::string::String;
use alloc::vec::Vec;

use crate::clf::{ClfProgram, GoldProgram, TranslateError};
use crate::token;

/// A question over an image set with its gold answer, `(q, I, y)`.
///
/// Images are referenced by id and resolved against whichever graph source
/// (gold or generated) is being evaluated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QaExample {
    pub example_id: String,
    pub question: String,
    pub image_ids: Vec<String>,
    pub gold_answer: String,
    pub gold_program: Option<GoldProgram>,
    pub template_id: Option<String>,
}

impl QaExample {
    pub fn new(
        example_id: impl Into<String>,
        question: impl Into<String>,
        image_ids: Vec<String>,
        answer: &str,
    ) -> Self {
        QaExample {
            example_id: example_id.into(),
            question: question.into(),
            image_ids,
            gold_answer: token::normalize_lossy(answer),
            gold_program: None,
            template_id: None,
        }
    }

    pub fn with_program(mut self, p: impl Into<GoldProgram>) -> Self {
        self.gold_program = Some(p.into());
        self
    }

    pub fn with_template(mut self, t: impl Into<String>) -> Self {
        self.template_id = Some(t.into());
        self
    }

    /// The gold program in CLF, translating OLF annotations on the fly.
    pub fn clf_program(&self) -> Option<Result<ClfProgram, TranslateError>> {
        self.gold_program.as_ref().map(GoldProgram::to_clf)
    }

    pub fn template_or_default(&self) -> &str {
        self.template_id.as_deref().unwrap_or("untemplated")
    }
}
