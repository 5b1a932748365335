"""Recursive-descent parsers for ``.pop`` system specs and bounded-PCTL formulas.

Expression precedence (loosest first): ``+ -``, then ``* /``, then unary
``-``; binary operators associate to the left. ``min``/``max`` are written
in call form, ``min(a, b)``.
"""

from __future__ import annotations

from .ast import (
    FALSE, TRUE, And, Arg, Atom, BExp, BinOp, Branch, COMPARISONS, Const, Expr,
    Formula, Frc, GlobalLabel, Implies, InitEntry, LocalLabel, Neg, Next, Not,
    Or, PathFormula, Prob, ProbDef, StateDef, SystemSpec, Until,
)
from .errors import (
    BExpError, DSLSyntaxError, HorizonError, InitError, ProbabilityBoundError,
    SpecError,
)
from .lexer import EOF, IDENT, NUMBER, PUNCT, Token, tokenize

SPEC_KEYWORDS = frozenset({"frc", "min", "max", "label", "local", "global", "init"})
FORMULA_KEYWORDS = frozenset({"true", "false", "P", "X", "U"})
RESERVED = SPEC_KEYWORDS | FORMULA_KEYWORDS

# Bracket nesting beyond this is rejected instead of exhausting the stack.
MAX_DEPTH = 200


class _Parser:
    def __init__(self, source):
        self.toks: list[Token] = tokenize(source)
        self.i = 0
        self.depth = 0

    # -- token helpers ---------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, offset: int = 1) -> Token:
        return self.toks[min(self.i + offset, len(self.toks) - 1)]

    def advance(self) -> Token:
        t = self.toks[self.i]
        if t.kind != EOF:
            self.i += 1
        return t

    def at(self, text: str, kind: str = PUNCT) -> bool:
        return self.tok.kind == kind and self.tok.text == text

    def at_kw(self, word: str) -> bool:
        return self.at(word, IDENT)

    def accept(self, text: str, kind: str = PUNCT) -> Token | None:
        if self.at(text, kind):
            return self.advance()
        return None

    def fail(self, message: str, tok: Token | None = None, cls=DSLSyntaxError):
        tok = tok or self.tok
        raise cls(message, tok.line, tok.col)

    def describe(self, tok: Token) -> str:
        return "end of input" if tok.kind == EOF else repr(tok.text)

    def expect(self, text: str, kind: str = PUNCT) -> Token:
        if not self.at(text, kind):
            self.fail(f"expected {text!r}, found {self.describe(self.tok)}")
        return self.advance()

    def ident(self, what: str, reserved=SPEC_KEYWORDS) -> Token:
        t = self.tok
        if t.kind != IDENT:
            self.fail(f"expected {what}, found {self.describe(t)}")
        if t.text in reserved:
            self.fail(f"{t.text!r} is a reserved word and cannot be used as {what}")
        return self.advance()

    def number(self, what: str) -> tuple[float, Token]:
        t = self.tok
        if t.kind != NUMBER:
            self.fail(f"expected {what}, found {self.describe(t)}")
        self.advance()
        return float(t.text), t

    def signed_number(self, what: str) -> tuple[float, Token]:
        start = self.tok
        sign = -1.0 if self.accept("-") else 1.0
        value, tok = self.number(what)
        return sign * value, (start if sign < 0 else tok)

    def integer(self, what: str) -> tuple[int, Token]:
        start = self.tok
        negative = bool(self.accept("-"))
        t = self.tok
        if t.kind != NUMBER or not t.text.isdigit():
            self.fail(f"expected {what} (a non-negative integer), found {self.describe(t)}")
        self.advance()
        value = int(t.text)
        return (-value if negative else value), start

    def enter(self):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            self.fail("nesting too deep")

    def leave(self):
        self.depth -= 1

    def end_statement(self):
        # The terminator of the very last statement may be omitted.
        if self.accept(";") is None and self.tok.kind != EOF:
            self.fail(f"expected ';', found {self.describe(self.tok)}")

    # -- arithmetic expressions -----------------------------------------
    def expr(self) -> Expr:
        left = self.term()
        while self.at("+") or self.at("-"):
            op = self.advance()
            left = BinOp(op.text, left, self.term(), pos=op.pos)
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.at("*") or self.at("/"):
            op = self.advance()
            left = BinOp(op.text, left, self.unary(), pos=op.pos)
        return left

    def unary(self) -> Expr:
        if self.at("-"):
            op = self.advance()
            self.enter()
            try:
                return Neg(self.unary(), pos=op.pos)
            finally:
                self.leave()
        return self.primary_expr()

    def primary_expr(self) -> Expr:
        t = self.tok
        if t.kind == NUMBER:
            self.advance()
            return Const(float(t.text), pos=t.pos)
        if t.kind == IDENT and t.text == "frc":
            self.advance()
            name = self.ident("a state name after 'frc'")
            return Frc(name.text, pos=t.pos)
        if t.kind == IDENT and t.text in ("min", "max"):
            self.advance()
            self.expect("(")
            self.enter()
            try:
                a = self.expr()
                self.expect(",")
                b = self.expr()
            finally:
                self.leave()
            self.expect(")")
            return BinOp(t.text, a, b, pos=t.pos)
        if self.accept("("):
            self.enter()
            try:
                e = self.expr()
            finally:
                self.leave()
            self.expect(")")
            return e
        if t.kind == IDENT:
            self.fail(f"unexpected name {t.text!r} in expression (state fractions are written 'frc {t.text}')")
        self.fail(f"expected an expression, found {self.describe(t)}")

    # -- system specification --------------------------------------------
    def system_spec(self) -> SystemSpec:
        states, probs, local, glob, init = [], [], [], [], []
        init_seen: list[Token] = []
        while self.tok.kind != EOF:
            t = self.tok
            if t.kind == IDENT and t.text == "label":
                lab = self.label()
                (local if isinstance(lab, LocalLabel) else glob).append(lab)
            elif t.kind == IDENT and t.text == "init":
                init_seen.append(t)
                if len(init_seen) > 1:
                    self.fail("duplicate 'init' declaration", t, InitError)
                init.extend(self.init_decl())
            elif t.kind == IDENT and self.peek().kind == PUNCT and self.peek().text == ":=":
                states.append(self.state_def())
            elif t.kind == IDENT and self.peek().kind == PUNCT and self.peek().text == "::":
                probs.append(self.prob_def())
            elif t.kind == IDENT:
                self.fail(f"expected ':=' or '::' after {t.text!r}", self.peek())
            else:
                self.fail(f"expected a declaration, found {self.describe(t)}")
        return SystemSpec(tuple(states), tuple(probs), tuple(local), tuple(glob), tuple(init))

    def state_def(self) -> StateDef:
        name = self.ident("a state name")
        self.expect(":=")
        branches = [self.branch()]
        while self.accept("+"):
            branches.append(self.branch())
        self.end_statement()
        return StateDef(name.text, tuple(branches), pos=name.pos)

    def branch(self) -> Branch:
        action = self.ident("an action name")
        self.expect(".")
        target = self.ident("a target state name")
        return Branch(action.text, target.text, pos=action.pos)

    def prob_def(self) -> ProbDef:
        name = self.ident("an action name")
        self.expect("::")
        e = self.expr()
        self.end_statement()
        return ProbDef(name.text, e, pos=name.pos)

    def label(self):
        kw = self.advance()
        if self.accept("local", IDENT):
            atom = self.ident("an atom name", RESERVED)
            self.expect("=")
            names = [self.ident("a state name").text]
            while self.accept(","):
                names.append(self.ident("a state name").text)
            self.end_statement()
            return LocalLabel(atom.text, tuple(names), pos=atom.pos)
        if self.accept("global", IDENT):
            atom = self.ident("an atom name", RESERVED)
            self.expect("=")
            bexp = self.bexp()
            self.end_statement()
            return GlobalLabel(atom.text, bexp, pos=atom.pos)
        self.fail("expected 'local' or 'global' after 'label'", self.tok if self.tok.kind != EOF else kw)

    def bexp(self) -> BExp:
        start = self.tok
        body = self.expr()
        rel = self.tok
        if rel.kind == PUNCT and rel.text in ("<=", ">=", "="):
            self.fail(f"global label relation must be '<' or '>', not {rel.text!r}", rel, BExpError)
        if not (self.at("<") or self.at(">")):
            self.fail(f"expected '<' or '>' in global label, found {self.describe(rel)}")
        self.advance()
        threshold, _ = self.signed_number("a threshold")
        func, args = abstract_fractions(body)
        return BExp(func, args, rel.text, threshold, pos=start.pos)

    def init_decl(self) -> list[InitEntry]:
        self.advance()
        self.expect("<")
        entries = [self.init_entry()]
        while self.accept(","):
            entries.append(self.init_entry())
        self.expect(">")
        self.end_statement()
        return entries

    def init_entry(self) -> InitEntry:
        name = self.ident("a state name")
        self.expect("[")
        count, _ = self.integer("a population count")
        self.expect("]")
        return InitEntry(name.text, count, pos=name.pos)

    # -- formulas ---------------------------------------------------------
    def formula(self) -> Formula:
        self.enter()
        try:
            left = self.disjunction()
            if self.at("=>"):
                self.advance()
                return Implies(left, self.formula())
            return left
        finally:
            self.leave()

    def disjunction(self) -> Formula:
        left = self.conjunction()
        while self.at("|") or self.at("||"):
            op = self.advance()
            left = Or(left, self.conjunction(), pos=op.pos)
        return left

    def conjunction(self) -> Formula:
        left = self.negation()
        while self.at("&") or self.at("&&"):
            self.advance()
            left = And(left, self.negation())
        return left

    def negation(self) -> Formula:
        if self.at("!"):
            op = self.advance()
            self.enter()
            try:
                return Not(self.negation(), pos=op.pos)
            finally:
                self.leave()
        return self.state_primary()

    def state_primary(self) -> Formula:
        t = self.tok
        if self.accept("("):
            f = self.formula()
            self.expect(")")
            return f
        if t.kind == IDENT:
            if t.text == "true":
                self.advance()
                return TRUE
            if t.text == "false":
                self.advance()
                return FALSE
            if t.text == "P":
                return self.prob()
            atom = self.ident("an atom", RESERVED)
            return Atom(atom.text, pos=atom.pos)
        self.fail(f"expected a state formula, found {self.describe(t)}")

    def prob(self) -> Prob:
        p = self.advance()
        op = self.tok
        if not (op.kind == PUNCT and op.text in COMPARISONS):
            self.fail(f"expected one of {', '.join(COMPARISONS)} after 'P', found {self.describe(op)}")
        self.advance()
        bound, btok = self.signed_number("a probability bound")
        if not 0.0 <= bound <= 1.0:
            self.fail(f"probability bound {bound:g} is outside [0, 1]", btok, ProbabilityBoundError)
        self.expect("[")
        path = self.path()
        self.expect("]")
        return Prob(op.text, bound, path, pos=p.pos)

    def path(self) -> PathFormula:
        if self.at_kw("X"):
            x = self.advance()
            return Next(self.formula(), pos=x.pos)
        left = self.formula()
        u = self.tok
        if not self.at_kw("U"):
            self.fail(f"expected 'U' in path formula, found {self.describe(u)}")
        self.advance()
        self.expect("<=")
        k, ktok = self.integer("a step bound")
        if k < 0:
            self.fail(f"step bound {k} is negative", ktok, HorizonError)
        right = self.formula()
        return Until(left, right, k, pos=u.pos)


def abstract_fractions(body: Expr) -> tuple[Expr, tuple[str, ...]]:
    """Replace each distinct ``frc C`` by an argument placeholder.

    Returns the function body and the state list in first-occurrence order.
    """
    args: list[str] = []

    def go(e: Expr) -> Expr:
        if isinstance(e, Frc):
            if e.state not in args:
                args.append(e.state)
            return Arg(args.index(e.state), pos=e.pos)
        if isinstance(e, Neg):
            return Neg(go(e.arg), pos=e.pos)
        if isinstance(e, BinOp):
            return BinOp(e.op, go(e.left), go(e.right), pos=e.pos)
        return e

    return go(body), tuple(args)


def _guard(fn, source):
    try:
        return fn(_Parser(source))
    except RecursionError:
        raise DSLSyntaxError("nesting too deep") from None


def parse_spec_unchecked(source: str | bytes) -> SystemSpec:
    """Parse without semantic validation (see :func:`flyfast.lang.validate`)."""
    return _guard(lambda p: p.system_spec(), source)


def parse_system_spec(source: str | bytes) -> SystemSpec:
    """Parse and validate a system spec; raise the first error found."""
    from .validate import raise_for_errors, validate

    spec = parse_spec_unchecked(source)
    raise_for_errors(validate(spec))
    return spec


def parse_formula(source: str | bytes) -> Formula:
    def run(p: _Parser) -> Formula:
        f = p.formula()
        if p.tok.kind != EOF:
            p.fail(f"unexpected {p.describe(p.tok)} after formula")
        return f

    return _guard(run, source)


def parse_formula_file(source: str | bytes) -> list[tuple[str, Formula]]:
    """Parse a ``.pctl`` file: one formula per line, ``#`` comments.

    A line may start with ``name:`` to name the formula; unnamed formulas
    are called ``f<line>``.
    """
    from .lexer import decode

    out = []
    for lineno, raw in enumerate(decode(source).splitlines(), 1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        name = f"f{lineno}"
        head, sep, rest = line.partition(":")
        if sep and head.strip().isidentifier():
            name, line = head.strip(), rest
        try:
            out.append((name, parse_formula(line)))
        except SpecError as exc:
            raise type(exc)(exc.message, lineno, exc.col) from None
    return out
