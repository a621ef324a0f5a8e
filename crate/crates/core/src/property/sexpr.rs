use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexpr {
    Atom(String),
    List(Vec<Sexpr>),
}

impl Sexpr {
    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexpr::Atom(a) => Some(a),
            Sexpr::List(_) => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexpr]> {
        match self {
            Sexpr::List(l) => Some(l),
            Sexpr::Atom(_) => None,
        }
    }

    /// Head symbol of a non-empty list.
    pub fn head(&self) -> Option<&str> {
        self.list().and_then(|l| l.first()).and_then(Sexpr::atom)
    }
}

impl fmt::Display for Sexpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexpr::Atom(a) => f.write_str(a),
            Sexpr::List(items) => {
                f.write_str("(")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{it}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Reads exactly one expression. `;` starts a comment running to end of line.
pub fn read(src: &str) -> Result<Sexpr, String> {
    let tokens = tokenize(src);
    let mut pos = 0;
    let e = parse(&tokens, &mut pos)?;
    if pos != tokens.len() {
        return Err(format!("unexpected `{}` after expression", tokens[pos]));
    }
    Ok(e)
}

fn tokenize(src: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut comment = false;
    for c in src.chars() {
        if comment {
            comment = c != '\n';
            continue;
        }
        match c {
            ';' => {
                comment = true;
                flush(&mut cur, &mut out);
            }
            '(' | ')' => {
                flush(&mut cur, &mut out);
                out.push(c.to_string());
            }
            c if c.is_whitespace() => flush(&mut cur, &mut out),
            c => cur.push(c),
        }
    }
    flush(&mut cur, &mut out);
    out
}

fn flush(cur: &mut String, out: &mut Vec<String>) {
    if !cur.is_empty() {
        out.push(std::mem::take(cur));
    }
}

fn parse(tokens: &[String], pos: &mut usize) -> Result<Sexpr, String> {
    let t = tokens.get(*pos).ok_or("unexpected end of expression")?;
    *pos += 1;
    match t.as_str() {
        "(" => {
            let mut items = Vec::new();
            loop {
                match tokens.get(*pos).map(String::as_str) {
                    None => return Err("missing `)`".into()),
                    Some(")") => {
                        *pos += 1;
                        return Ok(Sexpr::List(items));
                    }
                    Some(_) => items.push(parse(tokens, pos)?),
                }
            }
        }
        ")" => Err("unexpected `)`".into()),
        a => Ok(Sexpr::Atom(a.to_string())),
    }
}
