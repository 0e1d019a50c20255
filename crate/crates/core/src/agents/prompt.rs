//! Plain-text prompt templates with `{name}` placeholders.

use std::fs;
use std::io;
use std::path::Path;

/// Placeholder names a template may use.
pub const PLACEHOLDERS: &[&str] = &["identity", "transcript_chunk", "codes", "themes", "scores"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    text: String,
}

impl PromptTemplate {
    pub fn new(text: impl Into<String>) -> Self {
        Self { text: text.into() }
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Substitutes known placeholders in a single left-to-right pass, so
    /// substituted values are never re-expanded. Unknown `{...}` sequences
    /// and placeholders without a value are left as written.
    pub fn render(&self, vars: &[(&str, &str)]) -> String {
        let mut out = String::with_capacity(self.text.len());
        let mut rest = self.text.as_str();
        while let Some(open) = rest.find('{') {
            out.push_str(&rest[..open]);
            let after = &rest[open + 1..];
            let value = after.find('}').and_then(|close| {
                let name = &after[..close];
                vars.iter()
                    .find(|(k, _)| *k == name)
                    .map(|(_, v)| (*v, close))
            });
            match value {
                Some((v, close)) => {
                    out.push_str(v);
                    rest = &after[close + 1..];
                }
                None => {
                    out.push('{');
                    rest = after;
                }
            }
        }
        out.push_str(rest);
        out
    }
}

/// Templates for the four agent calls.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    pub coder: PromptTemplate,
    pub themes: PromptTemplate,
    pub revise: PromptTemplate,
    pub critic: PromptTemplate,
}

impl Default for PromptSet {
    fn default() -> Self {
        Self {
            coder: PromptTemplate::new(include_str!("../../templates/coder.txt")),
            themes: PromptTemplate::new(include_str!("../../templates/themes.txt")),
            revise: PromptTemplate::new(include_str!("../../templates/revise.txt")),
            critic: PromptTemplate::new(include_str!("../../templates/critic.txt")),
        }
    }
}

impl PromptSet {
    /// Defaults overridden by any of `coder.txt`, `themes.txt`, `revise.txt`
    /// or `critic.txt` found in `dir`.
    pub fn from_dir(dir: &Path) -> io::Result<Self> {
        let mut set = Self::default();
        for (name, slot) in [
            ("coder.txt", &mut set.coder),
            ("themes.txt", &mut set.themes),
            ("revise.txt", &mut set.revise),
            ("critic.txt", &mut set.critic),
        ] {
            let path = dir.join(name);
            if path.exists() {
                *slot = PromptTemplate::new(fs::read_to_string(path)?);
            }
        }
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_named_placeholders_once() {
        let t = PromptTemplate::new("{identity}: {transcript_chunk} {unknown} {");
        let out = t.render(&[("identity", "Coder"), ("transcript_chunk", "says {identity}")]);
        assert_eq!(out, "Coder: says {identity} {unknown} {");
    }

    #[test]
    fn default_templates_use_known_placeholders() {
        let set = PromptSet::default();
        for t in [&set.coder, &set.themes, &set.revise, &set.critic] {
            for (i, _) in t.text().match_indices('{') {
                let name: String = t.text()[i + 1..].chars().take_while(|&c| c != '}').collect();
                assert!(PLACEHOLDERS.contains(&name.as_str()), "{name}");
            }
        }
        assert!(set.coder.text().contains("{transcript_chunk}"));
        assert!(set.themes.text().contains("{codes}"));
    }
}
