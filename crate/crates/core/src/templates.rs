//! Catalog of parameterised property templates.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::fltl::{parse_formula, parse_skeleton, Formula};

const BUILTIN_XML: &str = include_str!("../assets/templates.xml");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub id: String,
    pub title: String,
    pub description: String,
    /// Placeholder names, in declaration order. Each accepts an event label
    /// or a fluent name.
    pub params: Vec<String>,
    pub skeleton: Formula,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("catalog syntax error: {0}")]
    CatalogSyntax(String),
    #[error("duplicate template id {0}")]
    DuplicateTemplateId(String),
    #[error("cannot read catalog {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("unknown template {0}")]
    UnknownTemplate(String),
    #[error("missing binding for ${0}")]
    MissingBinding(String),
    #[error("template has no parameter ${0}")]
    UnknownParameter(String),
    #[error("binding {param}={value} is not an event label or fluent name")]
    InvalidBinding { param: String, value: String },
    #[error("unknown name {0}")]
    UnknownName(String),
}

impl Template {
    /// Substitutes each placeholder with the bound atom. Names are checked
    /// for shape only.
    pub fn bind(&self, bindings: &BTreeMap<String, String>) -> Result<Formula, TemplateError> {
        if let Some(extra) = bindings.keys().find(|k| !self.params.contains(k)) {
            return Err(TemplateError::UnknownParameter(extra.clone()));
        }
        let mut atoms = BTreeMap::new();
        for p in &self.params {
            let value = bindings.get(p).ok_or_else(|| TemplateError::MissingBinding(p.clone()))?;
            let atom = parse_formula(value)
                .ok()
                .filter(|f| matches!(f, Formula::Event(_) | Formula::Fluent(_)))
                .ok_or_else(|| TemplateError::InvalidBinding { param: p.clone(), value: value.clone() })?;
            atoms.insert(p.as_str(), atom);
        }
        Ok(self.skeleton.map_leaves(&mut |leaf| match leaf {
            Formula::Param(p) => atoms[p.as_str()].clone(),
            other => other.clone(),
        }))
    }

    /// Like [`bind`](Self::bind), and additionally requires every bound
    /// name to satisfy `known` (an alphabet or fluent-list lookup).
    pub fn instantiate(
        &self,
        bindings: &BTreeMap<String, String>,
        known: impl Fn(&str) -> bool,
    ) -> Result<Formula, TemplateError> {
        let f = self.bind(bindings)?;
        for p in &self.params {
            let name = bindings[p].trim();
            if !known(name) {
                return Err(TemplateError::UnknownName(name.to_string()));
            }
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Catalog {
    pub templates: Vec<Template>,
    /// File merged over the built-ins, if any.
    pub source: Option<PathBuf>,
}

impl Catalog {
    /// The built-in templates alone.
    pub fn builtin() -> Self {
        let templates = parse_catalog(BUILTIN_XML).expect("built-in catalog is well-formed");
        Catalog { templates, source: None }
    }

    pub fn get(&self, id: &str) -> Option<&Template> {
        self.templates.iter().find(|t| t.id == id)
    }

    /// Merges `extra` over this catalog: same-id templates are replaced in
    /// place, new ones are appended in order.
    fn merge(&mut self, extra: Vec<Template>) {
        for t in extra {
            match self.templates.iter_mut().find(|x| x.id == t.id) {
                Some(slot) => *slot = t,
                None => self.templates.push(t),
            }
        }
    }
}

/// Loads the built-ins merged with the templates in `path`.
pub fn load_catalog(path: &Path) -> Result<Catalog, TemplateError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| TemplateError::Io { path: path.to_path_buf(), message: e.to_string() })?;
    let mut catalog = load_catalog_str(&text)?;
    catalog.source = Some(path.to_path_buf());
    Ok(catalog)
}

/// Like [`load_catalog`] for catalog text already in memory.
pub fn load_catalog_str(xml: &str) -> Result<Catalog, TemplateError> {
    let mut catalog = Catalog::builtin();
    if !xml.trim().is_empty() {
        catalog.merge(parse_catalog(xml)?);
    }
    Ok(catalog)
}

fn parse_catalog(xml: &str) -> Result<Vec<Template>, TemplateError> {
    let syntax = |m: String| TemplateError::CatalogSyntax(m);
    let doc = roxmltree::Document::parse(xml).map_err(|e| syntax(e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "templates" {
        return Err(syntax(format!("expected <templates>, found <{}>", root.tag_name().name())));
    }
    let mut out: Vec<Template> = Vec::new();
    for node in root.children().filter(|n| n.is_element() && n.tag_name().name() == "template") {
        let attr = |name: &str| {
            node.attribute(name)
                .map(str::to_string)
                .ok_or_else(|| syntax(format!("template without {name} attribute")))
        };
        let id = attr("id")?;
        let title = node.attribute("title").unwrap_or(&id).to_string();
        let child_text = |name: &str| {
            node.children()
                .find(|c| c.is_element() && c.tag_name().name() == name)
                .map(|c| c.text().unwrap_or("").trim().to_string())
        };
        let description = child_text("description").unwrap_or_default();
        let params: Vec<String> = node
            .children()
            .filter(|c| c.is_element() && c.tag_name().name() == "param")
            .map(|c| c.attribute("name").map(str::to_string).ok_or_else(|| syntax(format!("{id}: param without name"))))
            .collect::<Result<_, _>>()?;
        let text = child_text("skeleton").ok_or_else(|| syntax(format!("{id}: missing skeleton")))?;
        let skeleton = parse_skeleton(&text).map_err(|e| syntax(format!("{id}: skeleton {e}")))?;
        let used: Vec<&str> = skeleton.params().into_iter().collect();
        let mut declared: Vec<&str> = params.iter().map(String::as_str).collect();
        declared.sort_unstable();
        if declared.windows(2).any(|w| w[0] == w[1]) || used != declared {
            return Err(syntax(format!("{id}: placeholders {used:?} do not match params {declared:?}")));
        }
        if out.iter().any(|t| t.id == id) {
            return Err(TemplateError::DuplicateTemplateId(id));
        }
        out.push(Template { id, title, description, params, skeleton });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binds(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn builtins() {
        let c = load_catalog_str("").unwrap();
        let ids: Vec<&str> = c.templates.iter().map(|t| t.id.as_str()).collect();
        assert_eq!(
            ids,
            [
                "existence",
                "absence",
                "response",
                "precedence",
                "responded-existence",
                "co-existence",
                "chain-response",
                "not-co-existence",
                "termination",
                "deadlock-freedom"
            ]
        );
        let text: Vec<String> = c.templates.iter().map(|t| t.skeleton.to_string()).collect();
        assert_eq!(
            text,
            [
                "<>$A",
                "[]!$A",
                "[]($A -> <>$B)",
                "!$B W $A",
                "<>$A -> <>$B",
                "(<>$A -> <>$B) && (<>$B -> <>$A)",
                "[]($A -> X $B)",
                "!(<>$A && <>$B)",
                "<>_terminate",
                "[]!_deadlock"
            ]
        );
    }

    #[test]
    fn response_instantiation() {
        let c = Catalog::builtin();
        let f = c.get("response").unwrap().bind(&binds(&[("A", "SomeBook"), ("B", "pay.start")])).unwrap();
        assert_eq!(f, parse_formula("[](SomeBook -> <> pay.start)").unwrap());
        let f = c.get("existence").unwrap().bind(&binds(&[("A", "register.start")])).unwrap();
        assert_eq!(f.to_string(), "<>register.start");
    }

    #[test]
    fn binding_errors() {
        let c = Catalog::builtin();
        let prec = c.get("precedence").unwrap();
        let known = |n: &str| n == "pay.start";
        assert_eq!(
            prec.instantiate(&binds(&[("A", "pay.start"), ("B", "register.end")]), known),
            Err(TemplateError::UnknownName("register.end".into()))
        );
        assert_eq!(prec.bind(&binds(&[("A", "pay.start")])), Err(TemplateError::MissingBinding("B".into())));
        assert!(matches!(
            prec.bind(&binds(&[("A", "a b"), ("B", "c.end")])),
            Err(TemplateError::InvalidBinding { .. })
        ));
        assert_eq!(
            prec.bind(&binds(&[("A", "x.end"), ("B", "c.end"), ("C", "d.end")])),
            Err(TemplateError::UnknownParameter("C".into()))
        );
    }

    #[test]
    fn override_and_duplicates() {
        let xml = r#"<templates>
            <template id="response" title="Response"><description>replaced</description>
              <param name="A"/><param name="B"/><skeleton>[]($A -> &lt;&gt;$B)</skeleton></template>
            <template id="mine" title="Mine"><param name="A"/><skeleton>[]&lt;&gt;$A</skeleton></template>
        </templates>"#;
        let c = load_catalog_str(xml).unwrap();
        assert_eq!(c.templates.len(), 11);
        assert_eq!(c.templates[2].description, "replaced");
        assert_eq!(c.templates[10].id, "mine");

        let dup = r#"<templates>
            <template id="x"><param name="A"/><skeleton>$A</skeleton></template>
            <template id="x"><param name="A"/><skeleton>!$A</skeleton></template>
        </templates>"#;
        assert_eq!(load_catalog_str(dup), Err(TemplateError::DuplicateTemplateId("x".into())));
    }

    #[test]
    fn placeholder_mismatch() {
        let xml = r#"<templates><template id="bad"><param name="A"/><skeleton>$A U $B</skeleton></template></templates>"#;
        assert!(matches!(load_catalog_str(xml), Err(TemplateError::CatalogSyntax(_))));
        assert!(matches!(load_catalog_str("<templates>"), Err(TemplateError::CatalogSyntax(_))));
    }
}
