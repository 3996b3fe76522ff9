//! XML form of permission documents.
//!
//! Only the subset of the DDS permissions schema that participates in access
//! decisions is accepted; any other element is rejected.

use std::fmt::Write as _;

use quick_xml::escape::escape;
use quick_xml::events::Event;
use quick_xml::Reader;

use super::model::*;
use super::PermissionsError;
use crate::glob::GlobPattern;
use crate::time::Timestamp;

pub const OBFUSCATION_MARKER: &str = "hmac-sha256";

#[derive(Debug)]
struct Element {
    name: String,
    attributes: Vec<(String, String)>,
    text: String,
    children: Vec<Element>,
    offset: usize,
    path: String,
}

impl Element {
    fn attribute(&self, name: &str) -> Option<&str> {
        self.attributes
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    }

    fn text(&self) -> &str {
        self.text.trim()
    }

    fn missing(&self, child: &str) -> PermissionsError {
        PermissionsError::MissingElement {
            path: self.path.clone(),
            element: child.to_owned(),
            offset: self.offset,
        }
    }

    fn unexpected(&self) -> PermissionsError {
        PermissionsError::UnexpectedElement {
            path: self.path.clone(),
            offset: self.offset,
        }
    }

    fn invalid(&self, message: impl Into<String>) -> PermissionsError {
        PermissionsError::InvalidValue {
            path: self.path.clone(),
            offset: self.offset,
            message: message.into(),
        }
    }

    fn only_children(&self, allowed: &[&str]) -> Result<(), PermissionsError> {
        match self.children.iter().find(|c| !allowed.contains(&c.name.as_str())) {
            Some(c) => Err(c.unexpected()),
            None => Ok(()),
        }
    }

    fn child(&self, name: &str) -> Result<&Element, PermissionsError> {
        let mut found = self.children.iter().filter(|c| c.name == name);
        let first = found.next().ok_or_else(|| self.missing(name))?;
        if let Some(dup) = found.next() {
            return Err(dup.invalid(format!("duplicate <{name}>")));
        }
        Ok(first)
    }

    fn optional_child(&self, name: &str) -> Result<Option<&Element>, PermissionsError> {
        match self.children.iter().any(|c| c.name == name) {
            true => self.child(name).map(Some),
            false => Ok(None),
        }
    }
}

fn build_tree(document: &[u8]) -> Result<Element, PermissionsError> {
    let text = std::str::from_utf8(document).map_err(|e| PermissionsError::Xml {
        offset: e.valid_up_to(),
        message: "document is not valid UTF-8".into(),
    })?;
    let mut reader = Reader::from_str(text);
    let mut stack: Vec<Element> = Vec::new();
    let mut root: Option<Element> = None;
    loop {
        let offset = reader.buffer_position() as usize;
        let event = reader.read_event().map_err(|e| PermissionsError::Xml {
            offset: reader.error_position() as usize,
            message: e.to_string(),
        })?;
        let xml_err = |message: String| PermissionsError::Xml { offset, message };
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let name = String::from_utf8_lossy(e.local_name().as_ref()).into_owned();
                let mut attributes = Vec::new();
                for attr in e.attributes() {
                    let attr = attr.map_err(|e| xml_err(e.to_string()))?;
                    let value = attr.unescape_value().map_err(|e| xml_err(e.to_string()))?;
                    attributes.push((
                        String::from_utf8_lossy(attr.key.local_name().as_ref()).into_owned(),
                        value.into_owned(),
                    ));
                }
                let path = match stack.last() {
                    Some(parent) => format!("{}/{}", parent.path, name),
                    None => format!("/{name}"),
                };
                let element = Element {
                    name,
                    attributes,
                    text: String::new(),
                    children: Vec::new(),
                    offset,
                    path,
                };
                if matches!(event, Event::Start(_)) {
                    stack.push(element);
                } else {
                    attach(&mut stack, &mut root, element, offset)?;
                }
            }
            Event::End(_) => {
                let element = stack.pop().ok_or_else(|| xml_err("unbalanced end tag".into()))?;
                attach(&mut stack, &mut root, element, offset)?;
            }
            Event::Text(t) => {
                let t = t.unescape().map_err(|e| xml_err(e.to_string()))?;
                match stack.last_mut() {
                    Some(parent) => parent.text.push_str(&t),
                    None if t.trim().is_empty() => {}
                    None => return Err(xml_err("text outside the root element".into())),
                }
            }
            Event::CData(t) => {
                let parent = stack
                    .last_mut()
                    .ok_or_else(|| xml_err("CDATA outside the root element".into()))?;
                parent.text.push_str(&String::from_utf8_lossy(&t));
            }
            Event::Eof => break,
            Event::Decl(_) | Event::Comment(_) | Event::PI(_) | Event::DocType(_) => {}
        }
    }
    if let Some(open) = stack.last() {
        return Err(PermissionsError::Xml {
            offset: open.offset,
            message: format!("unclosed element <{}>", open.name),
        });
    }
    root.ok_or(PermissionsError::Xml {
        offset: 0,
        message: "document has no root element".into(),
    })
}

fn attach(
    stack: &mut [Element],
    root: &mut Option<Element>,
    element: Element,
    offset: usize,
) -> Result<(), PermissionsError> {
    match stack.last_mut() {
        Some(parent) => {
            parent.children.push(element);
            Ok(())
        }
        None if root.is_none() => {
            *root = Some(element);
            Ok(())
        }
        None => Err(PermissionsError::Xml {
            offset,
            message: "multiple root elements".into(),
        }),
    }
}

/// Parses a permissions document, preserving grant and rule order.
pub fn parse_permissions(document: &[u8]) -> Result<PermissionsFile, PermissionsError> {
    let root = build_tree(document)?;
    if root.name != "dds" {
        return Err(root.unexpected());
    }
    root.only_children(&["permissions"])?;
    let permissions = root.child("permissions")?;
    permissions.only_children(&["grant"])?;
    let obfuscated = match permissions.attribute("obfuscated") {
        None => false,
        Some(OBFUSCATION_MARKER) => true,
        Some(other) => return Err(permissions.invalid(format!("unknown obfuscation scheme {other:?}"))),
    };
    let grants = permissions
        .children
        .iter()
        .map(parse_grant)
        .collect::<Result<Vec<_>, _>>()?;
    if grants.is_empty() {
        return Err(permissions.missing("grant"));
    }
    let file = PermissionsFile { grants, obfuscated };
    file.validate()?;
    Ok(file)
}

fn parse_grant(el: &Element) -> Result<Grant, PermissionsError> {
    el.only_children(&["subject_name", "validity", "allow_rule", "deny_rule", "default"])?;
    let subject = el.child("subject_name")?;
    let subject_name = subject.text().to_owned();
    if subject_name.is_empty() {
        return Err(subject.invalid("empty subject_name"));
    }
    let validity_el = el.child("validity")?;
    validity_el.only_children(&["not_before", "not_after"])?;
    let validity = Validity {
        not_before: parse_timestamp(validity_el.child("not_before")?)?,
        not_after: parse_timestamp(validity_el.child("not_after")?)?,
    };
    if validity.not_before >= validity.not_after {
        return Err(validity_el.invalid("not_before must precede not_after"));
    }
    let default = parse_qualifier(el.child("default")?)?;
    let rules = el
        .children
        .iter()
        .filter(|c| c.name.ends_with("_rule"))
        .map(parse_rule)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Grant {
        name: el.attribute("name").map(str::to_owned),
        subject_name,
        validity,
        rules,
        default,
    })
}

fn parse_timestamp(el: &Element) -> Result<Timestamp, PermissionsError> {
    el.text().parse().map_err(|_| PermissionsError::InvalidTimestamp {
        path: el.path.clone(),
        offset: el.offset,
        value: el.text().to_owned(),
    })
}

fn parse_qualifier(el: &Element) -> Result<Qualifier, PermissionsError> {
    match el.text() {
        "ALLOW" => Ok(Qualifier::Allow),
        "DENY" => Ok(Qualifier::Deny),
        other => Err(el.invalid(format!("expected ALLOW or DENY, found {other:?}"))),
    }
}

fn parse_rule(el: &Element) -> Result<Rule, PermissionsError> {
    el.only_children(&["domains", "publish", "subscribe", "relay"])?;
    let qualifier = if el.name == "allow_rule" {
        Qualifier::Allow
    } else {
        Qualifier::Deny
    };
    let domains = parse_domains(el.child("domains")?)?;
    let criteria = |name| {
        el.optional_child(name)?
            .map(parse_criteria)
            .transpose()
    };
    let rule = Rule {
        qualifier,
        domains,
        publish: criteria("publish")?,
        subscribe: criteria("subscribe")?,
        relay: criteria("relay")?,
    };
    if rule.all_criteria().next().is_none() {
        return Err(el.missing("publish|subscribe|relay"));
    }
    Ok(rule)
}

fn parse_u32(el: &Element) -> Result<u32, PermissionsError> {
    el.text()
        .parse()
        .map_err(|_| el.invalid(format!("expected a domain id, found {:?}", el.text())))
}

fn parse_domains(el: &Element) -> Result<DomainSet, PermissionsError> {
    el.only_children(&["id", "id_range"])?;
    let mut entries = Vec::new();
    for c in &el.children {
        if c.name == "id" {
            entries.push(DomainEntry::Id(parse_u32(c)?));
        } else {
            c.only_children(&["min", "max"])?;
            let min = parse_u32(c.child("min")?)?;
            let max = c.optional_child("max")?.map(parse_u32).transpose()?;
            if max.is_some_and(|m| m < min) {
                return Err(c.invalid("empty domain range"));
            }
            entries.push(DomainEntry::Range { min, max });
        }
    }
    if entries.is_empty() {
        return Err(el.missing("id"));
    }
    Ok(DomainSet { entries })
}

fn parse_criteria(el: &Element) -> Result<Criteria, PermissionsError> {
    el.only_children(&["topics", "partitions", "data_tags"])?;
    let topics_el = el.child("topics")?;
    let topics = parse_expressions(topics_el, "topic")?;
    if topics.is_empty() {
        return Err(topics_el.missing("topic"));
    }
    let partitions = match el.optional_child("partitions")? {
        Some(p) => parse_expressions(p, "partition")?,
        None => Vec::new(),
    };
    let mut data_tags = Vec::new();
    if let Some(tags) = el.optional_child("data_tags")? {
        tags.only_children(&["tag"])?;
        for tag in &tags.children {
            tag.only_children(&["name", "value"])?;
            data_tags.push(DataTag {
                name: tag.child("name")?.text().to_owned(),
                value: tag.child("value")?.text().to_owned(),
            });
        }
    }
    Ok(Criteria {
        topics,
        partitions,
        data_tags,
    })
}

fn parse_expressions(el: &Element, item: &str) -> Result<Vec<GlobPattern>, PermissionsError> {
    el.only_children(&[item])?;
    el.children
        .iter()
        .map(|c| {
            GlobPattern::parse(c.text()).map_err(|source| PermissionsError::InvalidPattern {
                path: c.path.clone(),
                offset: c.offset,
                source,
            })
        })
        .collect()
}

/// Canonical serialization: fixed element order, two-space indentation,
/// timestamps in `YYYY-MM-DDTHH:MM:SSZ`.
pub fn serialize_permissions(file: &PermissionsFile) -> Vec<u8> {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<dds>\n");
    if file.obfuscated {
        let _ = writeln!(out, "  <permissions obfuscated=\"{OBFUSCATION_MARKER}\">");
    } else {
        out.push_str("  <permissions>\n");
    }
    for grant in &file.grants {
        match &grant.name {
            Some(name) => {
                let _ = writeln!(out, "    <grant name=\"{}\">", escape(name.as_str()));
            }
            None => out.push_str("    <grant>\n"),
        }
        leaf(&mut out, 6, "subject_name", &grant.subject_name);
        out.push_str("      <validity>\n");
        leaf(&mut out, 8, "not_before", &grant.validity.not_before.to_string());
        leaf(&mut out, 8, "not_after", &grant.validity.not_after.to_string());
        out.push_str("      </validity>\n");
        for rule in &grant.rules {
            let tag = match rule.qualifier {
                Qualifier::Deny => "deny_rule",
                _ => "allow_rule",
            };
            let _ = writeln!(out, "      <{tag}>");
            out.push_str("        <domains>\n");
            for entry in &rule.domains.entries {
                match *entry {
                    DomainEntry::Id(id) => leaf(&mut out, 10, "id", &id.to_string()),
                    DomainEntry::Range { min, max } => {
                        out.push_str("          <id_range>\n");
                        leaf(&mut out, 12, "min", &min.to_string());
                        if let Some(max) = max {
                            leaf(&mut out, 12, "max", &max.to_string());
                        }
                        out.push_str("          </id_range>\n");
                    }
                }
            }
            out.push_str("        </domains>\n");
            for (verb, criteria) in rule.all_criteria() {
                let name = match verb {
                    Verb::Publish => "publish",
                    Verb::Subscribe => "subscribe",
                    Verb::Relay => "relay",
                };
                let _ = writeln!(out, "        <{name}>");
                expressions(&mut out, "topics", "topic", &criteria.topics);
                if !criteria.partitions.is_empty() {
                    expressions(&mut out, "partitions", "partition", &criteria.partitions);
                }
                if !criteria.data_tags.is_empty() {
                    out.push_str("          <data_tags>\n");
                    for tag in &criteria.data_tags {
                        out.push_str("            <tag>\n");
                        leaf(&mut out, 14, "name", &tag.name);
                        leaf(&mut out, 14, "value", &tag.value);
                        out.push_str("            </tag>\n");
                    }
                    out.push_str("          </data_tags>\n");
                }
                let _ = writeln!(out, "        </{name}>");
            }
            let _ = writeln!(out, "      </{tag}>");
        }
        leaf(&mut out, 6, "default", &grant.default.to_string());
        out.push_str("    </grant>\n");
    }
    out.push_str("  </permissions>\n</dds>\n");
    out.into_bytes()
}

fn leaf(out: &mut String, indent: usize, name: &str, text: &str) {
    let _ = writeln!(out, "{:indent$}<{name}>{}</{name}>", "", escape(text));
}

fn expressions(out: &mut String, group: &str, item: &str, patterns: &[GlobPattern]) {
    let _ = writeln!(out, "          <{group}>");
    for p in patterns {
        leaf(out, 12, item, p.source());
    }
    let _ = writeln!(out, "          </{group}>");
}
