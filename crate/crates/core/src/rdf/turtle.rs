use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use super::graph::Graph;
use super::prefix::{is_prefix_name, ns, PrefixMap};
use super::term::{is_absolute_iri, Literal, Term, Triple};
use super::RdfError;

/// Parses a Turtle document. Document prefixes override `defaults`.
///
/// Supported: `@prefix`/`PREFIX`, `@base`/`BASE`, `;` and `,` lists, the
/// `a` keyword, IRIs, CURIEs, `_:x` labels, `[]` and `[ ... ]` blank
/// nodes, quoted strings (short and long forms), numbers, booleans,
/// datatypes and language tags. Collections and quoted triples are
/// rejected with a syntax error.
pub fn parse_turtle(text: &str, defaults: &PrefixMap) -> Result<Graph, RdfError> {
    let mut parser = Parser::new(text, defaults.clone());
    parser.document()?;
    Ok(parser.finish())
}

/// Like [`parse_turtle`], but starts from raw bytes and reports invalid
/// UTF-8 as a syntax error at the offending position.
pub fn parse_turtle_bytes(bytes: &[u8], defaults: &PrefixMap) -> Result<Graph, RdfError> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse_turtle(text, defaults),
        Err(e) => {
            let valid = std::str::from_utf8(&bytes[..e.valid_up_to()]).expect("valid prefix");
            let (line, column) = line_col(valid, valid.chars().count());
            Err(RdfError::Syntax {
                line,
                column,
                message: "invalid UTF-8".into(),
            })
        }
    }
}

fn line_col(text: &str, char_pos: usize) -> (usize, usize) {
    let mut line = 1;
    let mut column = 1;
    for c in text.chars().take(char_pos) {
        if c == '\n' {
            line += 1;
            column = 1;
        } else {
            column += 1;
        }
    }
    (line, column)
}

const ANON_MARK: char = '\u{0}';

struct Parser<'a> {
    text: &'a str,
    chars: Vec<char>,
    pos: usize,
    prefixes: PrefixMap,
    base: Option<String>,
    graph: Graph,
    anon_counter: usize,
    explicit_blanks: HashSet<String>,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, prefixes: PrefixMap) -> Self {
        Self {
            text,
            chars: text.chars().collect(),
            pos: 0,
            prefixes,
            base: None,
            graph: Graph::default(),
            anon_counter: 0,
            explicit_blanks: HashSet::new(),
        }
    }

    fn finish(self) -> Graph {
        let Parser {
            graph,
            prefixes,
            explicit_blanks,
            ..
        } = self;
        // Give anonymous nodes labels that cannot collide with written ones.
        let mut renames: HashMap<String, String> = HashMap::new();
        let mut next = 0usize;
        let mut relabel = |label: &str| -> String {
            if !label.starts_with(ANON_MARK) {
                return label.to_string();
            }
            renames
                .entry(label.to_string())
                .or_insert_with(|| loop {
                    let candidate = format!("anon{next}");
                    next += 1;
                    if !explicit_blanks.contains(&candidate) {
                        break candidate;
                    }
                })
                .clone()
        };
        let mut out = Graph::new(prefixes);
        // Sorted iteration keeps the anon numbering deterministic.
        let mut pending: Vec<&Triple> = graph.iter().collect();
        pending.sort_by_key(|t| anon_order(t));
        for t in pending {
            let fix = |term: &Term, relabel: &mut dyn FnMut(&str) -> String| match term {
                Term::Blank(l) => Term::Blank(relabel(l)),
                other => other.clone(),
            };
            let subject = fix(&t.subject, &mut relabel);
            let object = fix(&t.object, &mut relabel);
            out.insert(Triple {
                subject,
                predicate: t.predicate.clone(),
                object,
            });
        }
        out
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, RdfError> {
        let (line, column) = line_col(self.text, self.pos);
        Err(RdfError::Syntax {
            line,
            column,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        Some(c)
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(i, c)| self.peek_at(i) == Some(c))
    }

    fn starts_with_keyword(&self, kw: &str) -> bool {
        let n = kw.chars().count();
        kw.chars()
            .enumerate()
            .all(|(i, c)| self.peek_at(i).is_some_and(|d| d.eq_ignore_ascii_case(&c)))
            && !self.peek_at(n).is_some_and(|c| c.is_alphanumeric() || c == '_' || c == ':')
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += 1;
            } else if c == '#' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn expect(&mut self, c: char) -> Result<(), RdfError> {
        self.skip_ws();
        match self.peek() {
            Some(d) if d == c => {
                self.pos += 1;
                Ok(())
            }
            Some(d) => self.error(format!("expected `{c}`, found `{d}`")),
            None => self.error(format!("expected `{c}`, found end of input")),
        }
    }

    fn document(&mut self) -> Result<(), RdfError> {
        loop {
            self.skip_ws();
            if self.peek().is_none() {
                return Ok(());
            }
            if self.starts_with("@prefix") {
                self.pos += "@prefix".len();
                self.prefix_body()?;
                self.expect('.')?;
            } else if self.starts_with("@base") {
                self.pos += "@base".len();
                self.base_body()?;
                self.expect('.')?;
            } else if self.starts_with_keyword("PREFIX") {
                self.pos += "PREFIX".len();
                self.prefix_body()?;
            } else if self.starts_with_keyword("BASE") {
                self.pos += "BASE".len();
                self.base_body()?;
            } else if self.peek() == Some('@') {
                return self.error("unknown directive");
            } else {
                self.statement()?;
            }
        }
    }

    fn prefix_body(&mut self) -> Result<(), RdfError> {
        self.skip_ws();
        let start = self.pos;
        while self.peek().is_some_and(|c| c != ':' && !c.is_whitespace()) {
            self.pos += 1;
        }
        let name: String = self.chars[start..self.pos].iter().collect();
        if self.peek() != Some(':') || !is_prefix_name(&name) {
            return self.error(format!("malformed prefix name `{name}`"));
        }
        self.pos += 1;
        self.skip_ws();
        let namespace = self.iriref()?;
        self.prefixes.insert(name, namespace);
        Ok(())
    }

    fn base_body(&mut self) -> Result<(), RdfError> {
        self.skip_ws();
        let base = self.iriref()?;
        self.base = Some(base);
        Ok(())
    }

    fn statement(&mut self) -> Result<(), RdfError> {
        self.skip_ws();
        if self.peek() == Some('[') {
            let subject = self.blank_node_property_list()?;
            self.skip_ws();
            if self.peek() != Some('.') {
                self.predicate_object_list(&subject)?;
            }
        } else {
            let subject = self.subject()?;
            self.predicate_object_list(&subject)?;
        }
        self.expect('.')
    }

    fn subject(&mut self) -> Result<Term, RdfError> {
        self.skip_ws();
        match self.peek() {
            Some('<') if self.peek_at(1) == Some('<') => self.error("quoted triples are not supported"),
            Some('<') => Ok(Term::Iri(self.iriref()?)),
            Some('_') if self.peek_at(1) == Some(':') => self.blank_label(),
            Some('(') => self.error("collections are not supported"),
            Some('[') => self.blank_node_property_list(),
            Some('"') | Some('\'') => self.error("literal in subject position"),
            Some(_) => self.prefixed_name_term(),
            None => self.error("unexpected end of input"),
        }
    }

    fn predicate_object_list(&mut self, subject: &Term) -> Result<(), RdfError> {
        loop {
            let predicate = self.verb()?;
            self.object_list(subject, &predicate)?;
            self.skip_ws();
            if self.peek() != Some(';') {
                return Ok(());
            }
            while self.peek() == Some(';') {
                self.pos += 1;
                self.skip_ws();
            }
            // A trailing `;` may be followed directly by `.` or `]`.
            if matches!(self.peek(), Some('.') | Some(']') | None) {
                return Ok(());
            }
        }
    }

    fn verb(&mut self) -> Result<Term, RdfError> {
        self.skip_ws();
        if self.peek() == Some('a') && self.peek_at(1).is_none_or(|c| c.is_whitespace() || c == '<' || c == '[' || c == '_') {
            self.pos += 1;
            return Ok(Term::Iri(format!("{}type", ns::RDF)));
        }
        match self.peek() {
            Some('<') => Ok(Term::Iri(self.iriref()?)),
            Some('_') | Some('[') | Some('"') | Some('\'') | Some('(') => self.error("predicate must be an IRI"),
            Some(_) => self.prefixed_name_term(),
            None => self.error("expected predicate, found end of input"),
        }
    }

    fn object_list(&mut self, subject: &Term, predicate: &Term) -> Result<(), RdfError> {
        loop {
            let object = self.object()?;
            self.graph.insert(Triple {
                subject: subject.clone(),
                predicate: predicate.clone(),
                object,
            });
            self.skip_ws();
            if self.peek() == Some(',') {
                self.pos += 1;
            } else {
                return Ok(());
            }
        }
    }

    fn object(&mut self) -> Result<Term, RdfError> {
        self.skip_ws();
        match self.peek() {
            Some('<') if self.peek_at(1) == Some('<') => self.error("quoted triples are not supported"),
            Some('<') => Ok(Term::Iri(self.iriref()?)),
            Some('_') if self.peek_at(1) == Some(':') => self.blank_label(),
            Some('[') => self.blank_node_property_list(),
            Some('(') => self.error("collections are not supported"),
            Some('"') | Some('\'') => self.literal(),
            Some(c) if c.is_ascii_digit() || c == '+' || c == '-' || c == '.' => self.numeric(),
            Some(_) => {
                if self.starts_with_keyword("true") {
                    self.pos += 4;
                    return Ok(Term::Literal(Literal::boolean(true)));
                }
                if self.starts_with_keyword("false") {
                    self.pos += 5;
                    return Ok(Term::Literal(Literal::boolean(false)));
                }
                self.prefixed_name_term()
            }
            None => self.error("expected object, found end of input"),
        }
    }

    fn blank_node_property_list(&mut self) -> Result<Term, RdfError> {
        self.expect('[')?;
        let node = Term::Blank(format!("{ANON_MARK}{}", self.anon_counter));
        self.anon_counter += 1;
        self.skip_ws();
        if self.peek() == Some(']') {
            self.pos += 1;
            return Ok(node);
        }
        self.predicate_object_list(&node)?;
        self.expect(']')?;
        Ok(node)
    }

    fn blank_label(&mut self) -> Result<Term, RdfError> {
        self.pos += 2;
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.'))
        {
            self.pos += 1;
        }
        while self.pos > start && self.chars[self.pos - 1] == '.' {
            self.pos -= 1;
        }
        if self.pos == start {
            return self.error("empty blank node label");
        }
        let label: String = self.chars[start..self.pos].iter().collect();
        self.explicit_blanks.insert(label.clone());
        Ok(Term::Blank(label))
    }

    fn iriref(&mut self) -> Result<String, RdfError> {
        if self.peek() != Some('<') {
            return self.error("expected IRI");
        }
        self.pos += 1;
        let mut value = String::new();
        loop {
            match self.bump() {
                None => return self.error("unterminated IRI"),
                Some('>') => break,
                Some('\\') => {
                    let c = self.unicode_escape()?;
                    value.push(c);
                }
                Some(c) if c.is_whitespace() || matches!(c, '<' | '"' | '{' | '}' | '|' | '^' | '`') => {
                    self.pos -= 1;
                    return self.error(format!("invalid character {c:?} in IRI"));
                }
                Some(c) => value.push(c),
            }
        }
        self.resolve(value)
    }

    fn resolve(&self, value: String) -> Result<String, RdfError> {
        if is_absolute_iri(&value) {
            return Ok(value);
        }
        let Some(base) = &self.base else {
            return self.error(format!("relative IRI <{value}> without a base"));
        };
        let resolved = if value.is_empty() {
            base.clone()
        } else if value.starts_with('#') {
            format!("{}{}", base.split('#').next().unwrap_or(base), value)
        } else {
            let cut = base.rfind('/').map(|i| i + 1).unwrap_or(base.len());
            format!("{}{}", &base[..cut], value)
        };
        if is_absolute_iri(&resolved) {
            Ok(resolved)
        } else {
            self.error(format!("cannot resolve <{value}>"))
        }
    }

    /// After a backslash inside an IRI: `\uXXXX` or `\UXXXXXXXX`.
    fn unicode_escape(&mut self) -> Result<char, RdfError> {
        let width = match self.bump() {
            Some('u') => 4,
            Some('U') => 8,
            _ => return self.error("invalid escape"),
        };
        self.hex_char(width)
    }

    fn hex_char(&mut self, width: usize) -> Result<char, RdfError> {
        let mut code = 0u32;
        for _ in 0..width {
            let Some(d) = self.bump().and_then(|c| c.to_digit(16)) else {
                return self.error("malformed unicode escape");
            };
            code = code * 16 + d;
        }
        match char::from_u32(code) {
            Some(c) => Ok(c),
            None => self.error("escape is not a unicode scalar value"),
        }
    }

    fn prefixed_name_term(&mut self) -> Result<Term, RdfError> {
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.'))
        {
            self.pos += 1;
        }
        if self.peek() != Some(':') {
            let word: String = self.chars[start..self.pos].iter().collect();
            self.pos = start;
            return if word.is_empty() {
                self.error(format!("unexpected character {:?}", self.peek().unwrap_or(' ')))
            } else {
                self.error(format!("unexpected token `{word}`"))
            };
        }
        let prefix: String = self.chars[start..self.pos].iter().collect();
        if !is_prefix_name(&prefix) {
            self.pos = start;
            return self.error(format!("malformed prefix `{prefix}`"));
        }
        self.pos += 1;
        let local = self.local_name()?;
        let Some(namespace) = self.prefixes.get(&prefix) else {
            return Err(RdfError::UnknownPrefix(prefix));
        };
        let iri = format!("{namespace}{local}");
        if !is_absolute_iri(&iri) {
            return self.error(format!("`{prefix}:{local}` does not expand to an absolute IRI"));
        }
        Ok(Term::Iri(iri))
    }

    fn local_name(&mut self) -> Result<String, RdfError> {
        let mut out = String::new();
        // (cursor, byte length of `out`, was a dot) after each accepted char.
        let mut marks: Vec<(usize, usize, bool)> = Vec::new();
        loop {
            match self.peek() {
                Some(c) if c.is_alphanumeric() || matches!(c, '_' | '-' | ':') => {
                    self.pos += 1;
                    out.push(c);
                    marks.push((self.pos, out.len(), false));
                }
                Some('.') => {
                    self.pos += 1;
                    out.push('.');
                    marks.push((self.pos, out.len(), true));
                }
                Some('%') => {
                    let hex: String = (1..=2).filter_map(|i| self.peek_at(i)).collect();
                    if hex.len() != 2 || !hex.chars().all(|c| c.is_ascii_hexdigit()) {
                        return self.error("malformed percent escape");
                    }
                    self.pos += 3;
                    out.push('%');
                    out.push_str(&hex);
                    marks.push((self.pos, out.len(), false));
                }
                Some('\\') => {
                    let Some(c) = self.peek_at(1) else {
                        return self.error("dangling escape");
                    };
                    if !"_~.-!$&'()*+,;=/?#@%".contains(c) {
                        return self.error(format!("invalid local name escape `\\{c}`"));
                    }
                    self.pos += 2;
                    out.push(c);
                    marks.push((self.pos, out.len(), false));
                }
                _ => break,
            }
        }
        // A trailing `.` terminates the statement rather than the name.
        while let Some(&(_, _, true)) = marks.last() {
            marks.pop();
        }
        match marks.last() {
            Some(&(pos, len, _)) => {
                self.pos = pos;
                out.truncate(len);
            }
            None => {
                self.pos -= out.chars().count();
                out.clear();
            }
        }
        Ok(out)
    }

    fn literal(&mut self) -> Result<Term, RdfError> {
        let lexical = self.string()?;
        match self.peek() {
            Some('@') => {
                self.pos += 1;
                let start = self.pos;
                while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '-') {
                    self.pos += 1;
                }
                let tag: String = self.chars[start..self.pos].iter().collect();
                let valid = !tag.is_empty()
                    && tag.split('-').all(|p| !p.is_empty())
                    && tag.split('-').next().is_some_and(|p| p.chars().all(|c| c.is_ascii_alphabetic()));
                if !valid {
                    return self.error(format!("malformed language tag `{tag}`"));
                }
                Ok(Term::Literal(Literal::lang(lexical, tag)))
            }
            Some('^') if self.peek_at(1) == Some('^') => {
                self.pos += 2;
                let datatype = match self.peek() {
                    Some('<') => self.iriref()?,
                    _ => match self.prefixed_name_term()? {
                        Term::Iri(v) => v,
                        _ => unreachable!("prefixed names are IRIs"),
                    },
                };
                Ok(Term::Literal(Literal::typed(lexical, datatype)))
            }
            _ => Ok(Term::Literal(Literal::simple(lexical))),
        }
    }

    fn string(&mut self) -> Result<String, RdfError> {
        let quote = self.bump().expect("caller checked quote");
        let long = self.peek() == Some(quote) && self.peek_at(1) == Some(quote);
        if long {
            self.pos += 2;
        }
        let open = self.pos;
        let mut out = String::new();
        loop {
            let Some(c) = self.bump() else {
                self.pos = open;
                return self.error("unterminated string");
            };
            match c {
                '\\' => out.push(self.string_escape()?),
                c if c == quote && !long => return Ok(out),
                c if c == quote && self.peek() == Some(quote) && self.peek_at(1) == Some(quote) => {
                    // Up to two extra quotes may precede the closing delimiter.
                    let mut run = 3;
                    while self.peek_at(run - 1) == Some(quote) {
                        run += 1;
                    }
                    for _ in 0..run - 3 {
                        out.push(quote);
                    }
                    self.pos += run - 1;
                    return Ok(out);
                }
                '\n' | '\r' if !long => {
                    self.pos -= 1;
                    return self.error("unterminated string");
                }
                c => out.push(c),
            }
        }
    }

    fn string_escape(&mut self) -> Result<char, RdfError> {
        Ok(match self.bump() {
            Some('t') => '\t',
            Some('b') => '\u{8}',
            Some('n') => '\n',
            Some('r') => '\r',
            Some('f') => '\u{c}',
            Some('"') => '"',
            Some('\'') => '\'',
            Some('\\') => '\\',
            Some('u') => self.hex_char(4)?,
            Some('U') => self.hex_char(8)?,
            _ => return self.error("invalid string escape"),
        })
    }

    fn numeric(&mut self) -> Result<Term, RdfError> {
        let start = self.pos;
        if matches!(self.peek(), Some('+') | Some('-')) {
            self.pos += 1;
        }
        let int_start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        let int_digits = self.pos - int_start;
        let mut kind = "integer";
        if self.peek() == Some('.') && self.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
            kind = "decimal";
        } else if int_digits == 0 {
            self.pos = start;
            return self.error("malformed number");
        }
        if matches!(self.peek(), Some('e') | Some('E')) {
            self.pos += 1;
            if matches!(self.peek(), Some('+') | Some('-')) {
                self.pos += 1;
            }
            let exp_start = self.pos;
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
            if self.pos == exp_start {
                return self.error("malformed exponent");
            }
            kind = "double";
        }
        let lexical: String = self.chars[start..self.pos].iter().collect();
        Ok(Term::Literal(Literal::typed(lexical, format!("{}{kind}", ns::XSD))))
    }
}

fn anon_order(t: &Triple) -> (bool, &Triple) {
    let anon = |term: &Term| matches!(term, Term::Blank(l) if l.starts_with(ANON_MARK));
    (anon(&t.subject) || anon(&t.object), t)
}

/// Serializes with every prefix of the graph's map declared.
pub fn serialize_turtle(g: &Graph) -> String {
    render(g, false)
}

/// Serializes declaring only the prefixes the body actually uses.
pub fn serialize_turtle_minimal(g: &Graph) -> String {
    render(g, true)
}

fn render(g: &Graph, minimal: bool) -> String {
    let prefixes = g.prefixes();
    let mut used = BTreeSet::new();
    let mut body = String::new();
    let rdf_type = format!("{}type", ns::RDF);

    let triples: Vec<&Triple> = g.iter().collect();
    for group in triples.chunk_by(|x, y| x.subject == y.subject) {
        // `a` leads each subject block; the rest keep sorted order.
        let (types, rest): (Vec<&Triple>, Vec<&Triple>) = group
            .iter()
            .partition(|t| t.predicate.as_iri() == Some(rdf_type.as_str()));
        body.push_str(&format_term(&group[0].subject, prefixes, &mut used));
        let mut current_predicate: Option<&Term> = None;
        for t in types.into_iter().chain(rest) {
            if current_predicate == Some(&t.predicate) {
                body.push_str(" , ");
            } else {
                body.push_str(if current_predicate.is_some() { " ;\n    " } else { " " });
                if t.predicate.as_iri() == Some(rdf_type.as_str()) {
                    body.push('a');
                } else {
                    body.push_str(&format_term(&t.predicate, prefixes, &mut used));
                }
                body.push(' ');
                current_predicate = Some(&t.predicate);
            }
            body.push_str(&format_term(&t.object, prefixes, &mut used));
        }
        body.push_str(" .\n\n");
    }
    body.truncate(body.trim_end_matches('\n').len());
    if !body.is_empty() {
        body.push('\n');
    }

    let mut out = String::new();
    for (p, n) in prefixes.iter() {
        if !minimal || used.contains(p) {
            let _ = writeln!(out, "@prefix {p}: <{n}> .");
        }
    }
    if !out.is_empty() && !body.is_empty() {
        out.push('\n');
    }
    out.push_str(&body);
    out
}

fn format_term<'m>(term: &Term, prefixes: &'m PrefixMap, used: &mut BTreeSet<&'m str>) -> String {
    match term {
        Term::Iri(v) => format_iri(v, prefixes, used),
        Term::Blank(l) => format!("_:{l}"),
        Term::Literal(l) => {
            let xsd = |local: &str| format!("{}{local}", ns::XSD);
            if let Some(dt) = &l.datatype {
                if *dt == xsd("boolean") && (l.lexical == "true" || l.lexical == "false") {
                    return l.lexical.clone();
                }
                if *dt == xsd("integer") && is_integer_lexical(&l.lexical) {
                    return l.lexical.clone();
                }
            }
            let mut s = quote(&l.lexical);
            if let Some(lang) = &l.language {
                s.push('@');
                s.push_str(lang);
            } else if let Some(dt) = &l.datatype {
                s.push_str("^^");
                s.push_str(&format_iri(dt, prefixes, used));
            }
            s
        }
    }
}

fn format_iri<'m>(iri: &str, prefixes: &'m PrefixMap, used: &mut BTreeSet<&'m str>) -> String {
    match prefixes.compact(iri) {
        Some(curie) => {
            let p = curie.split_once(':').map(|(p, _)| p).unwrap_or("");
            if let Some((name, _)) = prefixes.iter().find(|(name, _)| *name == p) {
                used.insert(name);
            }
            curie
        }
        None => format!("<{iri}>"),
    }
}

fn is_integer_lexical(s: &str) -> bool {
    let digits = s.strip_prefix(['+', '-']).unwrap_or(s);
    !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit())
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            '\u{8}' => out.push_str("\\b"),
            '\u{c}' => out.push_str("\\f"),
            c if (c as u32) < 0x20 || c == '\u{7f}' => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults() -> PrefixMap {
        PrefixMap::defaults()
    }

    fn parse(text: &str) -> Graph {
        parse_turtle(text, &defaults()).unwrap_or_else(|e| panic!("{e}: {text}"))
    }

    #[test]
    fn single_statement() {
        let g = parse("@prefix ex: <http://x/> . ex:a ex:b ex:c .");
        assert_eq!(g.len(), 1);
        let t = g.iter().next().unwrap();
        assert_eq!(t.subject, Term::Iri("http://x/a".into()));
    }

    #[test]
    fn boolean_shorthand_with_default_prefixes() {
        let g = parse("ex:m metanet:isMetaphorical true .");
        let t = g.iter().next().unwrap();
        assert_eq!(t.object, Term::Literal(Literal::boolean(true)));
        assert_eq!(t.predicate, Term::Iri(format!("{}isMetaphorical", ns::METANET)));
    }

    #[test]
    fn document_prefix_overrides_default() {
        let g = parse("@prefix ex: <http://override/> . ex:a ex:b ex:c .");
        assert_eq!(g.iter().next().unwrap().subject, Term::Iri("http://override/a".into()));
        assert_eq!(g.prefixes().get("ex"), Some("http://override/"));
    }

    #[test]
    fn sparql_style_directives_and_base() {
        let g = parse("PREFIX p: <http://p/>\nBASE <http://b/dir/doc>\n<x> p:q <#frag> .");
        let t = g.iter().next().unwrap();
        assert_eq!(t.subject, Term::Iri("http://b/dir/x".into()));
        assert_eq!(t.object, Term::Iri("http://b/dir/doc#frag".into()));
    }

    #[test]
    fn lists_and_keyword_a() {
        let g = parse("ex:s a ex:C , ex:D ; ex:p ex:o ; .");
        assert_eq!(g.len(), 3);
    }

    #[test]
    fn literals() {
        let g = parse(
            r#"ex:s ex:p "plain" , "hi"@en-GB , "5"^^xsd:integer , 5 , -1.5 , 2e10 , 'single' , """long
with "quotes" inside""" , "esc\té" , false ."#,
        );
        assert_eq!(g.len(), 9, "`5` and \"5\"^^xsd:integer are the same term");
        let objects: Vec<_> = g.iter().filter_map(|t| t.object.as_literal()).collect();
        assert!(objects.iter().any(|l| l.lexical == "long\nwith \"quotes\" inside"));
        assert!(objects.iter().any(|l| l.lexical == "esc\té"));
        assert!(objects.iter().any(|l| l.language.as_deref() == Some("en-GB")));
        assert!(objects
            .iter()
            .any(|l| l.lexical == "-1.5" && l.datatype.as_deref() == Some(&*format!("{}decimal", ns::XSD))));
    }

    #[test]
    fn blank_nodes() {
        let g = parse("_:x ex:p [] . [ ex:q ex:r ; ex:s [ ex:t 1 ] ] ex:u _:anon0 .");
        assert_eq!(g.len(), 5);
        let labels = g.blank_labels();
        assert!(labels.contains("x"));
        assert!(labels.contains("anon0"));
        // Four distinct nodes: x, the `[]`, the outer list, the inner list, and the
        // explicitly written anon0 that the generated labels must avoid.
        assert_eq!(labels.len(), 5);
    }

    #[test]
    fn trailing_dot_is_not_part_of_local_name() {
        let g = parse("ex:a ex:b ex:c.\nex:d ex:e ex:f.");
        assert_eq!(g.len(), 2);
        assert!(g.iter().any(|t| t.object == Term::Iri("http://example.org/c".into())));
        // Inner dots and colons belong to the name.
        let g = parse("ex:a ex:b ex:c.ex:d .");
        assert!(g.iter().any(|t| t.object == Term::Iri("http://example.org/c.ex:d".into())));
    }

    #[test]
    fn local_names_with_dots_and_escapes() {
        let g = parse("ex:infect.01.arg0 ex:p ex:a\\/b .");
        let t = g.iter().next().unwrap();
        assert_eq!(t.subject, Term::Iri("http://example.org/infect.01.arg0".into()));
        assert_eq!(t.object, Term::Iri("http://example.org/a/b".into()));
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse_turtle("ex:a ex:b\n  \"open .", &defaults()).unwrap_err();
        assert!(matches!(err, RdfError::Syntax { line: 2, column: 4, .. }), "{err:?}");
        let err = parse_turtle("ex:a ex:b ex:c", &defaults()).unwrap_err();
        assert!(matches!(err, RdfError::Syntax { .. }));
        assert_eq!(
            parse_turtle("nope:a ex:b ex:c .", &defaults()).unwrap_err(),
            RdfError::UnknownPrefix("nope".into())
        );
    }

    #[test]
    fn unsupported_constructs_are_errors() {
        for doc in ["ex:a ex:b (1 2) .", "<< ex:a ex:b ex:c >> ex:d ex:e .", "\"lit\" ex:b ex:c .", "ex:a _:b ex:c ."] {
            assert!(matches!(parse_turtle(doc, &defaults()), Err(RdfError::Syntax { .. })), "{doc}");
        }
    }

    #[test]
    fn relative_iri_without_base() {
        assert!(matches!(parse_turtle("<a> <b> <c> .", &defaults()), Err(RdfError::Syntax { .. })));
    }

    #[test]
    fn invalid_utf8_is_a_syntax_error() {
        let bytes = b"ex:a ex:b \"\xff\" .";
        let err = parse_turtle_bytes(bytes, &defaults()).unwrap_err();
        assert!(matches!(err, RdfError::Syntax { line: 1, column: 12, .. }), "{err:?}");
    }

    #[test]
    fn empty_graph_serializes_to_prefixes_only() {
        let out = serialize_turtle(&Graph::with_default_prefixes());
        let lines: Vec<_> = out.lines().collect();
        assert!(lines.iter().all(|l| l.starts_with("@prefix ")));
        let mut sorted = lines.clone();
        sorted.sort();
        assert_eq!(lines, sorted);
        assert_eq!(lines.len(), PrefixMap::defaults().len());
        assert_eq!(serialize_turtle_minimal(&Graph::with_default_prefixes()), "");
    }

    #[test]
    fn serialization_layout() {
        let g = parse("ex:b ex:p \"x\" . ex:a a ex:C ; ex:p ex:z , ex:y . _:n ex:p true .");
        let out = serialize_turtle_minimal(&g);
        let expected = "@prefix ex: <http://example.org/> .\n\n\
            ex:a a ex:C ;\n    ex:p ex:y , ex:z .\n\n\
            ex:b ex:p \"x\" .\n\n\
            _:n ex:p true .\n";
        assert_eq!(out, expected);
    }

    #[test]
    fn round_trip_of_awkward_literals() {
        let g = parse(r#"ex:a ex:p "quote\" back\\slash\nnl" , "x"^^<http://other/dt> , "007"^^xsd:integer ."#);
        let again = parse_turtle(&serialize_turtle(&g), &PrefixMap::empty()).unwrap();
        assert_eq!(g.triples(), again.triples());
    }
}
