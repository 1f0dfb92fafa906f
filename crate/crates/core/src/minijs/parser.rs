use super::ast::{BinaryOp, DeclKind, LogicalOp, Node, NodeId, NodeKind, UnaryOp};
use super::lexer::{decode_string, tokenize, Token, TokenKind};
use super::{ParseError, ParseErrorKind, SourceSpan};

const MAX_DEPTH: usize = 400;

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    eof: SourceSpan,
    depth: usize,
}

fn node(kind: NodeKind, span: SourceSpan, children: Vec<Node>) -> Node {
    Node {
        id: NodeId(0),
        kind,
        span,
        children,
    }
}

/// Parses a MiniJS source file into a `Program` node. Node ids are assigned
/// in pre-order starting at zero.
pub fn parse(source: &str, file: &str) -> Result<Node, ParseError> {
    let toks = tokenize(source, file)?;
    let eof = {
        let (line, col) = end_position(source);
        SourceSpan {
            file: file.into(),
            start_line: line,
            start_col: col,
            end_line: line,
            end_col: col,
            lo: source.len() as u32,
            hi: source.len() as u32,
        }
    };
    let mut p = Parser {
        toks,
        pos: 0,
        eof: eof.clone(),
        depth: 0,
    };
    let mut body = Vec::new();
    while p.peek().is_some() {
        if let Some(s) = p.statement()? {
            body.push(s);
        }
    }
    let start = SourceSpan {
        start_line: 1,
        start_col: 1,
        lo: 0,
        ..eof.clone()
    };
    let mut program = node(NodeKind::Program, start.to(&eof), body);
    let mut next = 0;
    renumber(&mut program, &mut next);
    Ok(program)
}

fn end_position(src: &str) -> (u32, u32) {
    let mut line = 1;
    let mut col = 1;
    for c in src.chars() {
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    (line, col)
}

fn renumber(n: &mut Node, next: &mut u32) {
    n.id = NodeId(*next);
    *next += 1;
    for c in &mut n.children {
        renumber(c, next);
    }
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, k: usize) -> Option<&Token> {
        self.toks.get(self.pos + k)
    }

    fn at_punct(&self, p: &str) -> bool {
        self.peek().is_some_and(|t| t.is_punct(p))
    }

    fn at_keyword(&self, k: &str) -> bool {
        self.peek().is_some_and(|t| t.is_keyword(k))
    }

    fn next(&mut self) -> Result<Token, ParseError> {
        match self.toks.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t.clone())
            }
            None => Err(ParseError {
                kind: ParseErrorKind::UnexpectedEof,
                message: "unexpected end of input".into(),
                span: self.eof.clone(),
                expected: None,
            }),
        }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        match self.peek() {
            Some(t) => ParseError {
                kind: ParseErrorKind::UnexpectedToken,
                message: format!("unexpected token `{}`", t.text),
                span: t.span.clone(),
                expected: Some(expected.into()),
            },
            None => ParseError {
                kind: ParseErrorKind::UnexpectedEof,
                message: "unexpected end of input".into(),
                span: self.eof.clone(),
                expected: Some(expected.into()),
            },
        }
    }

    fn unsupported(&self, t: &Token) -> ParseError {
        ParseError {
            kind: ParseErrorKind::Unsupported,
            message: format!("`{}` is not supported", t.text),
            span: t.span.clone(),
            expected: None,
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<Token, ParseError> {
        if self.at_punct(p) {
            self.next()
        } else {
            Err(self.unexpected(&format!("`{p}`")))
        }
    }

    fn ident_name(&mut self) -> Result<Token, ParseError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => self.next(),
            _ => Err(self.unexpected("identifier")),
        }
    }

    /// Identifier or any reserved word, as allowed after `.` and in keys.
    fn property_name(&mut self) -> Result<Token, ParseError> {
        match self.peek() {
            Some(t)
                if matches!(
                    t.kind,
                    TokenKind::Identifier
                        | TokenKind::Keyword
                        | TokenKind::BoolLit
                        | TokenKind::NullLit
                ) =>
            {
                self.next()
            }
            _ => Err(self.unexpected("property name")),
        }
    }

    fn end_statement(&mut self) -> Result<(), ParseError> {
        if self.at_punct(";") {
            self.pos += 1;
            Ok(())
        } else if self.peek().is_none() || self.at_punct("}") {
            Ok(())
        } else {
            Err(self.unexpected("`;`"))
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            let span = self.peek().map(|t| t.span.clone()).unwrap_or(self.eof.clone());
            return Err(ParseError {
                kind: ParseErrorKind::Unsupported,
                message: "nesting too deep".into(),
                span,
                expected: None,
            });
        }
        Ok(())
    }

    // ---- statements ----

    fn statement(&mut self) -> Result<Option<Node>, ParseError> {
        self.enter()?;
        let r = self.statement_inner();
        self.depth -= 1;
        r
    }

    fn statement_inner(&mut self) -> Result<Option<Node>, ParseError> {
        let t = self.peek().cloned().ok_or_else(|| self.unexpected("statement"))?;
        if t.is_punct(";") {
            self.pos += 1;
            return Ok(None);
        }
        if t.is_punct("{") {
            return self.block().map(Some);
        }
        if t.kind == TokenKind::Keyword {
            match t.text.as_str() {
                "var" | "let" | "const" => return self.var_decl().map(Some),
                "function" => return self.function(true).map(Some),
                "if" => return self.if_stmt().map(Some),
                "return" => {
                    self.pos += 1;
                    let mut children = Vec::new();
                    let mut span = t.span.clone();
                    if !(self.at_punct(";") || self.at_punct("}") || self.peek().is_none()) {
                        let e = self.expression()?;
                        span = span.to(&e.span);
                        children.push(e);
                    }
                    self.end_statement()?;
                    return Ok(Some(node(NodeKind::Return, span, children)));
                }
                "this" | "typeof" | "void" => {}
                _ => return Err(self.unsupported(&t)),
            }
        }
        let e = self.expression()?;
        self.end_statement()?;
        Ok(Some(node(NodeKind::ExprStmt, e.span.clone(), vec![e])))
    }

    fn block(&mut self) -> Result<Node, ParseError> {
        let open = self.expect_punct("{")?;
        let mut body = Vec::new();
        while !self.at_punct("}") {
            if self.peek().is_none() {
                return Err(self.unexpected("`}`"));
            }
            if let Some(s) = self.statement()? {
                body.push(s);
            }
        }
        let close = self.next()?;
        Ok(node(NodeKind::Block, open.span.to(&close.span), body))
    }

    fn var_decl(&mut self) -> Result<Node, ParseError> {
        let kw = self.next()?;
        let kind = match kw.text.as_str() {
            "var" => DeclKind::Var,
            "let" => DeclKind::Let,
            _ => DeclKind::Const,
        };
        let mut decls = Vec::new();
        loop {
            let name = self.ident_name()?;
            let mut span = name.span.clone();
            let mut children = Vec::new();
            if self.at_punct("=") {
                self.pos += 1;
                let init = self.assignment()?;
                span = span.to(&init.span);
                children.push(init);
            }
            decls.push(node(NodeKind::Declarator(name.text), span, children));
            if self.at_punct(",") {
                self.pos += 1;
            } else {
                break;
            }
        }
        let end = decls.last().map(|d| d.span.clone()).unwrap_or(kw.span.clone());
        self.end_statement()?;
        Ok(node(NodeKind::VarDecl(kind), kw.span.to(&end), decls))
    }

    fn if_stmt(&mut self) -> Result<Node, ParseError> {
        let kw = self.next()?;
        self.expect_punct("(")?;
        let test = self.expression()?;
        self.expect_punct(")")?;
        let cons = self.required_statement()?;
        let mut end = cons.span.clone();
        let mut children = vec![test, cons];
        if self.at_keyword("else") {
            self.pos += 1;
            let alt = self.required_statement()?;
            end = alt.span.clone();
            children.push(alt);
        }
        Ok(node(NodeKind::If, kw.span.to(&end), children))
    }

    /// Statement position that must produce a node (if/else bodies).
    fn required_statement(&mut self) -> Result<Node, ParseError> {
        let start = self.peek().map(|t| t.span.clone());
        match self.statement()? {
            Some(s) => Ok(s),
            // a bare `;` body
            None => Ok(node(NodeKind::Block, start.unwrap_or(self.eof.clone()), vec![])),
        }
    }

    fn params(&mut self) -> Result<Vec<String>, ParseError> {
        self.expect_punct("(")?;
        let mut params = Vec::new();
        while !self.at_punct(")") {
            params.push(self.ident_name()?.text);
            if self.at_punct(",") {
                self.pos += 1;
            } else if !self.at_punct(")") {
                return Err(self.unexpected("`,` or `)`"));
            }
        }
        self.pos += 1;
        Ok(params)
    }

    fn function(&mut self, declaration: bool) -> Result<Node, ParseError> {
        let kw = self.next()?;
        if self.at_punct("*") {
            let t = self.peek().cloned().unwrap();
            return Err(self.unsupported(&t));
        }
        let name = if self.peek().is_some_and(|t| t.kind == TokenKind::Identifier) {
            Some(self.next()?.text)
        } else if declaration {
            return Err(self.unexpected("function name"));
        } else {
            None
        };
        let params = self.params()?;
        let body = self.block()?;
        let span = kw.span.to(&body.span);
        let kind = match (declaration, name) {
            (true, Some(name)) => NodeKind::FunctionDecl { name, params },
            (_, name) => NodeKind::FunctionExpr { name, params },
        };
        Ok(node(kind, span, vec![body]))
    }

    // ---- expressions ----

    fn expression(&mut self) -> Result<Node, ParseError> {
        let first = self.assignment()?;
        if !self.at_punct(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.at_punct(",") {
            self.pos += 1;
            items.push(self.assignment()?);
        }
        let span = items[0].span.to(&items[items.len() - 1].span);
        Ok(node(NodeKind::Sequence, span, items))
    }

    fn arrow_ahead(&self) -> bool {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => {
                self.peek_at(1).is_some_and(|n| n.is_punct("=>"))
            }
            Some(t) if t.is_punct("(") => {
                let mut depth = 0usize;
                let mut k = 0;
                while let Some(t) = self.peek_at(k) {
                    if t.is_punct("(") {
                        depth += 1;
                    } else if t.is_punct(")") {
                        depth -= 1;
                        if depth == 0 {
                            return self.peek_at(k + 1).is_some_and(|n| n.is_punct("=>"));
                        }
                    }
                    k += 1;
                }
                false
            }
            _ => false,
        }
    }

    fn arrow(&mut self) -> Result<Node, ParseError> {
        let start = self.peek().unwrap().span.clone();
        let params = if self.at_punct("(") {
            self.params()?
        } else {
            vec![self.ident_name()?.text]
        };
        self.expect_punct("=>")?;
        let body = if self.at_punct("{") {
            self.block()?
        } else {
            self.assignment()?
        };
        let span = start.to(&body.span);
        Ok(node(NodeKind::ArrowExpr { params }, span, vec![body]))
    }

    fn assignment(&mut self) -> Result<Node, ParseError> {
        self.enter()?;
        let r = self.assignment_inner();
        self.depth -= 1;
        r
    }

    fn assignment_inner(&mut self) -> Result<Node, ParseError> {
        if self.arrow_ahead() {
            return self.arrow();
        }
        let lhs = self.conditional()?;
        if self.at_punct("=") {
            if !matches!(lhs.kind, NodeKind::Identifier(_) | NodeKind::Member { .. }) {
                return Err(self.unexpected("assignable target before `=`"));
            }
            self.pos += 1;
            let rhs = self.assignment()?;
            let span = lhs.span.to(&rhs.span);
            return Ok(node(NodeKind::Assign, span, vec![lhs, rhs]));
        }
        Ok(lhs)
    }

    fn conditional(&mut self) -> Result<Node, ParseError> {
        let test = self.logical_or()?;
        if !self.at_punct("?") {
            return Ok(test);
        }
        self.pos += 1;
        let cons = self.assignment()?;
        self.expect_punct(":")?;
        let alt = self.assignment()?;
        let span = test.span.to(&alt.span);
        Ok(node(NodeKind::Conditional, span, vec![test, cons, alt]))
    }

    fn logical_or(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.logical_and()?;
        while self.at_punct("||") {
            self.pos += 1;
            let rhs = self.logical_and()?;
            let span = lhs.span.to(&rhs.span);
            lhs = node(NodeKind::Logical(LogicalOp::Or), span, vec![lhs, rhs]);
        }
        Ok(lhs)
    }

    fn logical_and(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.equality()?;
        while self.at_punct("&&") {
            self.pos += 1;
            let rhs = self.equality()?;
            let span = lhs.span.to(&rhs.span);
            lhs = node(NodeKind::Logical(LogicalOp::And), span, vec![lhs, rhs]);
        }
        Ok(lhs)
    }

    fn binary_level(
        &mut self,
        ops: &[(&str, BinaryOp)],
        next: fn(&mut Self) -> Result<Node, ParseError>,
    ) -> Result<Node, ParseError> {
        let mut lhs = next(self)?;
        loop {
            let op = self.peek().and_then(|t| {
                ops.iter().find_map(|(s, op)| {
                    let hit = (t.kind == TokenKind::Punct || t.kind == TokenKind::Keyword)
                        && t.text == *s;
                    hit.then_some(*op)
                })
            });
            let Some(op) = op else { return Ok(lhs) };
            if let Some(t) = self.peek().filter(|t| t.is_keyword("instanceof")) {
                return Err(self.unsupported(t));
            }
            self.pos += 1;
            let rhs = next(self)?;
            let span = lhs.span.to(&rhs.span);
            lhs = node(NodeKind::Binary(op), span, vec![lhs, rhs]);
        }
    }

    fn equality(&mut self) -> Result<Node, ParseError> {
        self.binary_level(
            &[
                ("===", BinaryOp::StrictEq),
                ("!==", BinaryOp::StrictNotEq),
                ("==", BinaryOp::Eq),
                ("!=", BinaryOp::NotEq),
            ],
            Self::relational,
        )
    }

    fn relational(&mut self) -> Result<Node, ParseError> {
        self.binary_level(
            &[
                ("<=", BinaryOp::LtEq),
                (">=", BinaryOp::GtEq),
                ("<", BinaryOp::Lt),
                (">", BinaryOp::Gt),
                ("in", BinaryOp::In),
            ],
            Self::additive,
        )
    }

    fn additive(&mut self) -> Result<Node, ParseError> {
        self.binary_level(
            &[("+", BinaryOp::Add), ("-", BinaryOp::Sub)],
            Self::multiplicative,
        )
    }

    fn multiplicative(&mut self) -> Result<Node, ParseError> {
        self.binary_level(
            &[
                ("*", BinaryOp::Mul),
                ("/", BinaryOp::Div),
                ("%", BinaryOp::Rem),
            ],
            Self::unary,
        )
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        let op = match self.peek() {
            Some(t) if t.is_punct("!") => Some(UnaryOp::Not),
            Some(t) if t.is_punct("-") => Some(UnaryOp::Neg),
            Some(t) if t.is_keyword("typeof") => Some(UnaryOp::TypeOf),
            Some(t) if t.is_keyword("void") => Some(UnaryOp::Void),
            _ => None,
        };
        match op {
            Some(op) => {
                self.enter()?;
                let t = self.next()?;
                let operand = self.unary()?;
                self.depth -= 1;
                let span = t.span.to(&operand.span);
                Ok(node(NodeKind::Unary(op), span, vec![operand]))
            }
            None => self.postfix(),
        }
    }

    fn postfix(&mut self) -> Result<Node, ParseError> {
        let mut e = self.primary()?;
        loop {
            if self.at_punct(".") {
                self.pos += 1;
                let name = self.property_name()?;
                let prop = node(NodeKind::Identifier(name.text), name.span.clone(), vec![]);
                let span = e.span.to(&name.span);
                e = node(NodeKind::Member { computed: false }, span, vec![e, prop]);
            } else if self.at_punct("[") {
                self.pos += 1;
                let idx = self.expression()?;
                let close = self.expect_punct("]")?;
                let span = e.span.to(&close.span);
                e = node(NodeKind::Member { computed: true }, span, vec![e, idx]);
            } else if self.at_punct("(") {
                self.pos += 1;
                let mut children = vec![e];
                while !self.at_punct(")") {
                    children.push(self.assignment()?);
                    if self.at_punct(",") {
                        self.pos += 1;
                    } else if !self.at_punct(")") {
                        return Err(self.unexpected("`,` or `)`"));
                    }
                }
                let close = self.next()?;
                let span = children[0].span.to(&close.span);
                e = node(NodeKind::Call, span, children);
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        let t = self.peek().cloned().ok_or_else(|| self.unexpected("expression"))?;
        match t.kind {
            TokenKind::Identifier => {
                self.pos += 1;
                Ok(node(NodeKind::Identifier(t.text), t.span, vec![]))
            }
            TokenKind::StringLit => {
                self.pos += 1;
                let v = decode_string(&t.text).unwrap_or_default();
                Ok(node(NodeKind::StringLit(v), t.span, vec![]))
            }
            TokenKind::NumberLit => {
                self.pos += 1;
                let v = parse_number(&t.text).ok_or_else(|| ParseError {
                    kind: ParseErrorKind::UnexpectedToken,
                    message: format!("bad number `{}`", t.text),
                    span: t.span.clone(),
                    expected: None,
                })?;
                Ok(node(NodeKind::NumberLit(v), t.span, vec![]))
            }
            TokenKind::BoolLit => {
                self.pos += 1;
                Ok(node(NodeKind::BoolLit(t.text == "true"), t.span, vec![]))
            }
            TokenKind::NullLit => {
                self.pos += 1;
                Ok(node(NodeKind::NullLit, t.span, vec![]))
            }
            TokenKind::Keyword => match t.text.as_str() {
                "this" => {
                    self.pos += 1;
                    Ok(node(NodeKind::Identifier("this".into()), t.span, vec![]))
                }
                "function" => self.function(false),
                _ => Err(self.unsupported(&t)),
            },
            TokenKind::Punct => match t.text.as_str() {
                "(" => {
                    self.pos += 1;
                    let e = self.expression()?;
                    self.expect_punct(")")?;
                    Ok(e)
                }
                "{" => self.object(),
                "[" => self.array(),
                _ => Err(self.unexpected("expression")),
            },
        }
    }

    fn object(&mut self) -> Result<Node, ParseError> {
        let open = self.next()?;
        let mut props = Vec::new();
        while !self.at_punct("}") {
            let key_tok = match self.peek() {
                Some(t) if t.kind == TokenKind::StringLit => self.next()?,
                Some(t) if t.kind == TokenKind::NumberLit => self.next()?,
                Some(t) if t.is_punct("[") => {
                    let t = t.clone();
                    return Err(self.unsupported(&t));
                }
                _ => self.property_name()?,
            };
            let key = match key_tok.kind {
                TokenKind::StringLit => decode_string(&key_tok.text).unwrap_or_default(),
                TokenKind::NumberLit => parse_number(&key_tok.text)
                    .map(|n| n.to_string())
                    .unwrap_or(key_tok.text.clone()),
                _ => key_tok.text.clone(),
            };
            let value = if self.at_punct(":") {
                self.pos += 1;
                self.assignment()?
            } else if self.at_punct("(") {
                // method shorthand
                let params = self.params()?;
                let body = self.block()?;
                let span = key_tok.span.to(&body.span);
                node(NodeKind::FunctionExpr { name: None, params }, span, vec![body])
            } else if key_tok.kind == TokenKind::Identifier {
                node(NodeKind::Identifier(key.clone()), key_tok.span.clone(), vec![])
            } else {
                return Err(self.unexpected("`:`"));
            };
            let span = key_tok.span.to(&value.span);
            props.push(node(NodeKind::Property(key), span, vec![value]));
            if self.at_punct(",") {
                self.pos += 1;
            } else if !self.at_punct("}") {
                return Err(self.unexpected("`,` or `}`"));
            }
        }
        let close = self.next()?;
        Ok(node(NodeKind::ObjectLit, open.span.to(&close.span), props))
    }

    fn array(&mut self) -> Result<Node, ParseError> {
        let open = self.next()?;
        let mut items = Vec::new();
        while !self.at_punct("]") {
            items.push(self.assignment()?);
            if self.at_punct(",") {
                self.pos += 1;
            } else if !self.at_punct("]") {
                return Err(self.unexpected("`,` or `]`"));
            }
        }
        let close = self.next()?;
        Ok(node(NodeKind::ArrayLit, open.span.to(&close.span), items))
    }
}

fn parse_number(text: &str) -> Option<f64> {
    if let Some(hex) = text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")) {
        return u128::from_str_radix(hex, 16).ok().map(|v| v as f64);
    }
    text.parse().ok()
}
