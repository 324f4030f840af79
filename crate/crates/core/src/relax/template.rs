use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};

use crate::formula::AmrAtom;

const DEFAULT_TEMPLATES: &str = include_str!("../../data/templates.txt");

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("template for {role} must contain [X] and [Y] exactly once: {pattern:?}")]
    Placeholders { role: String, pattern: String },
    #[error("line {line}: expected `role pattern`")]
    Malformed { line: usize },
}

/// A sentence pattern with `[X]` and `[Y]` placeholders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub role: String,
    pub pattern: String,
}

impl Template {
    pub fn new(role: impl Into<String>, pattern: impl Into<String>) -> Result<Self, TemplateError> {
        let (role, pattern) = (role.into(), pattern.into());
        if pattern.matches("[X]").count() != 1 || pattern.matches("[Y]").count() != 1 {
            return Err(TemplateError::Placeholders { role, pattern });
        }
        Ok(Template { role, pattern })
    }

    pub fn fill(&self, x: &str, y: &str) -> String {
        // Substitute both placeholders in one pass so an argument that
        // itself contains "[Y]" is left alone.
        let (before_x, after_x) = self.pattern.split_once("[X]").expect("validated");
        if let Some((a, b)) = before_x.split_once("[Y]") {
            format!("{a}{y}{b}{x}{after_x}")
        } else {
            let (a, b) = after_x.split_once("[Y]").expect("validated");
            format!("{before_x}{x}{a}{y}{b}")
        }
    }
}

/// Role → template, with a generic fallback so lookup never fails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateRegistry {
    templates: BTreeMap<String, Template>,
    /// Pattern containing `[ROLE]`, `[X]` and `[Y]`.
    fallback: String,
}

impl Default for TemplateRegistry {
    fn default() -> Self {
        TemplateRegistry::parse(DEFAULT_TEMPLATES).expect("bundled templates are valid")
    }
}

impl TemplateRegistry {
    /// Reads `role pattern` lines; `#` starts a comment line and the role
    /// `*` sets the fallback.
    pub fn parse(text: &str) -> Result<Self, TemplateError> {
        let mut templates = BTreeMap::new();
        let mut fallback = String::from("[Y] is the [ROLE] of [X].");
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (role, pattern) = line
                .split_once(char::is_whitespace)
                .ok_or(TemplateError::Malformed { line: i + 1 })?;
            let pattern = pattern.trim();
            let template = Template::new(role.to_lowercase(), pattern)?;
            if role == "*" {
                fallback = template.pattern;
            } else {
                templates.insert(template.role.clone(), template);
            }
        }
        Ok(TemplateRegistry { templates, fallback })
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn insert(&mut self, template: Template) {
        self.templates.insert(template.role.to_lowercase(), template);
    }

    /// Case-insensitive lookup, falling back to the generic pattern.
    pub fn lookup(&self, role: &str) -> Template {
        let key = role.to_lowercase();
        match self.templates.get(&key) {
            Some(t) => t.clone(),
            None => Template {
                pattern: self.fallback.replace("[ROLE]", &key),
                role: key,
            },
        }
    }

    /// The verbalization of `atom`: its role's template with `[X]` set to the
    /// left argument and `[Y]` to the right one.
    pub fn instantiate(&self, atom: &AmrAtom) -> String {
        self.lookup(&atom.role).fill(&atom.left, &atom.right)
    }
}

pub fn instantiate(atom: &AmrAtom, registry: &TemplateRegistry) -> String {
    registry.instantiate(atom)
}

impl core::fmt::Display for Template {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{} {}", self.role, self.pattern)
    }
}

impl TemplateRegistry {
    /// Text form accepted by [`TemplateRegistry::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in self.templates.values() {
            out.push_str(&t.to_string());
            out.push('\n');
        }
        out.push_str("* ");
        out.push_str(&self.fallback);
        out.push('\n');
        out
    }
}
