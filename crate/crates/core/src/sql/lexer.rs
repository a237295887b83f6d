use super::SqlError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Token {
    /// Identifier or keyword, lower-cased.
    Word(String),
    Number(f64),
    Str(String),
    Sym(&'static str),
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Pos {
    pub line: usize,
    pub col: usize,
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<(Pos, Token)>, SqlError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let (mut line, mut col) = (1, 1);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize, chars: &[char]| {
        for _ in 0..n {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1, &chars);
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1, &chars);
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            let word: String = chars[start..i].iter().collect();
            out.push((pos, Token::Word(word.to_ascii_lowercase())));
            continue;
        }
        if c == '"' {
            let start = i + 1;
            let mut j = start;
            while j < chars.len() && chars[j] != '"' {
                j += 1;
            }
            if j >= chars.len() {
                return Err(SqlError::syntax(pos.line, pos.col, "unterminated quoted identifier"));
            }
            let word: String = chars[start..j].iter().collect();
            let n = j + 1 - i;
            advance(&mut i, &mut line, &mut col, n, &chars);
            out.push((pos, Token::Word(word.to_ascii_lowercase())));
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            col += i - start;
            let text: String = chars[start..i].iter().collect();
            let x = text
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| SqlError::syntax(pos.line, pos.col, format!("malformed number '{text}'")))?;
            out.push((pos, Token::Number(x)));
            continue;
        }
        if c == '\'' {
            let mut text = String::new();
            let mut j = i + 1;
            loop {
                if j >= chars.len() {
                    return Err(SqlError::syntax(pos.line, pos.col, "unterminated string literal"));
                }
                if chars[j] == '\'' {
                    if chars.get(j + 1) == Some(&'\'') {
                        text.push('\'');
                        j += 2;
                        continue;
                    }
                    break;
                }
                text.push(chars[j]);
                j += 1;
            }
            let n = j + 1 - i;
            advance(&mut i, &mut line, &mut col, n, &chars);
            out.push((pos, Token::Str(text)));
            continue;
        }
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let sym = match two.as_str() {
            "<>" => Some("<>"),
            "!=" => Some("<>"),
            "<=" => Some("<="),
            ">=" => Some(">="),
            _ => None,
        };
        if let Some(s) = sym {
            advance(&mut i, &mut line, &mut col, 2, &chars);
            out.push((pos, Token::Sym(s)));
            continue;
        }
        let sym = match c {
            '(' => "(",
            ')' => ")",
            ',' => ",",
            '.' => ".",
            ';' => ";",
            '*' => "*",
            '+' => "+",
            '-' => "-",
            '/' => "/",
            '=' => "=",
            '<' => "<",
            '>' => ">",
            _ => return Err(SqlError::syntax(pos.line, pos.col, format!("unexpected character '{c}'"))),
        };
        advance(&mut i, &mut line, &mut col, 1, &chars);
        out.push((pos, Token::Sym(sym)));
    }
    out.push((Pos { line, col }, Token::End));
    Ok(out)
}
