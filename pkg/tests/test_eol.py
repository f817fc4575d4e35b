import pytest

from conftest import build_graph, repo, script
from epsilite.errors import EvalError, ParseError
from epsilite.eol import Interpreter, ast, parse_eol, run_program
from epsilite.eol.interpreter import Frame
from epsilite.model import Access, Model
from epsilite.modelio import parse_metamodel, parse_model
from epsilite.values import Sequence, Set, Undefined, display, value_equals

GREETING_MM = parse_metamodel("class Greeting { attr text : String; }")


def evaluate(text: str, *models):
    """Evaluate a single expression against the given models."""
    ctx = Interpreter(repo(*models))
    program = parse_eol(f"return {text};")
    return ctx.run_statements(program.statements, ctx.globals)


def run(text: str, *models):
    result = run_program(parse_eol(text), repo(*models))
    if result.error:
        raise result.error
    return result.stdout


# -- parsing ----------------------------------------------------------------


def test_parse_simple_hello():
    program = parse_eol(script("hello_simple.eol"))
    assert [type(s) for s in program.statements] == [ast.VarDecl, ast.Assign]


def test_parse_transitive():
    program = parse_eol(script("transitive.eol"))
    # two declarations and the call statement
    assert [type(s) for s in program.statements] == [ast.VarDecl, ast.VarDecl, ast.ExprStmt]
    assert len(program.operations) == 4
    assert [op.name for op in program.operations if op.cached] == ["successors", "outgoing"]


def test_top_level_continue_rejected():
    with pytest.raises(ParseError, match="outside of a for loop"):
        parse_eol("continue;")


def test_continue_in_operation_inside_loop_still_rejected():
    with pytest.raises(ParseError):
        parse_eol("operation Node f() { continue; }")


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("var x = ;", "expected an expression"),
        ("var = 1;", "expected variable name"),
        ("x.y", "expected ';'"),
        ("1 = 2;", "invalid assignment target"),
        ('"abc', "unterminated string"),
        ("operation Node f(self) {}", "'self'"),
        ("operation Node f(a, a) {}", "duplicate parameter"),
        ("operation Node f() {} operation Node f() {}", "duplicate operation"),
        ("if (true) { operation f() {} }", "top level"),
        ("var x = 1 # 2;", "unexpected character"),
    ],
)
def test_parse_diagnostics(text, fragment):
    with pytest.raises(ParseError) as exc:
        parse_eol(text)
    assert fragment in str(exc.value)


def test_diagnostic_locations():
    with pytest.raises(ParseError) as exc:
        parse_eol("var x = 1;\nvar y = ;", file="s.eol")
    loc = exc.value.diagnostics[0].location
    assert (loc.file, loc.line, loc.column) == ("s.eol", 2, 9)


def test_qualified_context_and_collection_type():
    op = parse_eol("operation Original!Node successors() : Collection(Node) { return 1; }").operations[0]
    assert op.context == ast.TypeRef("Node", "Original")
    assert str(op.return_type) == "Collection(Node)"


def test_comments():
    assert run("// one\n-- two\n/* three */ 1.println();") == "1\n"


def test_precedence():
    assert evaluate("1 + 2 * 3") == 7
    assert evaluate("(1 + 2) * 3") == 9
    assert evaluate("10 - 2 - 3") == 5
    assert evaluate("not false and false") is False
    assert evaluate("true or false and false") is True
    assert evaluate("1 + 1 == 2 and 2 <> 3") is True
    assert evaluate("-2 * 3") == -6


# -- evaluation -------------------------------------------------------------


def test_hello_world_creates_greeting():
    m = Model("M", GREETING_MM, Access.WRITE)
    run(script("hello_simple.eol"), m)
    (g,) = m.elements
    assert g.eclass.name == "Greeting" and g.slots["text"] == "Hello World"


def test_node_count(g1):
    assert evaluate("Node.all.size", g1) == 4


def test_looping_edge_count(g1):
    assert evaluate("Edge.all.select(e|e.src == e.trg).size", g1) == 1


def test_string_concatenation():
    assert evaluate('"Hello" + " " + "World"') == "Hello World"
    assert evaluate('"n" + 1 + true') == "n1true"
    assert evaluate('1 + 2 + "x"') == "3x"


@pytest.mark.parametrize(
    "expr, expected",
    [("7 / 2", 3), ("-7 / 2", -3), ("7 / -2", -3), ("7.0 / 2", 3.5), ("1 + 0.5", 1.5), ("2 * 2.5", 5.0)],
)
def test_arithmetic(expr, expected):
    assert evaluate(expr) == expected


@pytest.mark.parametrize(
    "expr, fragment",
    [
        ("1 / 0", "division by zero"),
        ("9223372036854775807 + 1", "integer overflow"),
        ("true + 1", "not applicable"),
        ("1 and true", "not applicable"),
        ("not 1", "not applicable"),
        ("undefinedThing", "undefined variable or type"),
    ],
)
def test_runtime_errors(expr, fragment):
    with pytest.raises(EvalError, match=fragment):
        evaluate(expr)


def test_short_circuit():
    assert evaluate("false and (1 / 0 == 1)") is False
    assert evaluate("true or (1 / 0 == 1)") is True


def test_value_equals(g1):
    n1, n2 = g1.element("n1"), g1.element("n2")
    assert value_equals(n1, n1)
    assert value_equals(Sequence([n1, n2]), Sequence([n1, n2]))
    assert not value_equals(Sequence([n1, n2]), Sequence([n2, n1]))
    assert value_equals(Set([n1, n2]), Set([n2, n1]))
    assert not value_equals(Set([n1]), Sequence([n1]))
    assert value_equals(2, 2.0)
    assert not value_equals(True, 1)
    assert value_equals(Undefined, Undefined)
    assert not value_equals("1", 1)


def test_distinct_nodes_with_equal_names(graph_mm):
    m = parse_model('a : Node { name = "x" } b : Node { name = "x" }', graph_mm)
    assert not value_equals(m.element("a"), m.element("b"))
    assert evaluate("Node.all.first == Node.all.second", m) is False
    assert evaluate("Node.all.first.name == Node.all.second.name", m) is True


def test_set_uniqueness_is_structural(g1):
    assert evaluate("Set { Sequence { 1, 2 }, Sequence { 1, 2 }, Sequence { 2, 1 } }.size") == 2
    assert evaluate("Set { 1, 1.0, true }.size") == 2


@pytest.mark.parametrize(
    "value, text",
    [
        (4, "4"),
        (2.5, "2.5"),
        (0.1, "0.1"),
        (True, "true"),
        (Undefined, "undefined"),
        ("plain", "plain"),
        (Sequence([1, Set(["a"])]), "Sequence {1, Set {a}}"),
        (Sequence(), "Sequence {}"),
    ],
)
def test_display(value, text):
    assert display(value) == text


def test_display_element_and_message(g1):
    assert display(g1.element("e3")) == "Edge#e3"
    assert evaluate('"The edge " + Edge.all.selectOne(e|e.src.name == "n3") + " is dangling."', g1) == (
        "The edge Edge#e3 is dangling."
    )


def test_println_returns_receiver():
    assert run("var x = 3.println(); (x + 1).println(); 'a'.print();") == "3\n4\na"


def test_is_undefined(g2):
    assert evaluate("Edge.all.select(e|e.trg.isUndefined()).size", g2) == 1
    assert evaluate("Edge.all.first.src.isUndefined()", g2) is False


def test_navigation_on_undefined_errors(g2):
    with pytest.raises(EvalError, match="cannot navigate name on undefined"):
        evaluate("Edge.all.selectOne(e|e.trg.isUndefined()).trg.name", g2)
    with pytest.raises(EvalError, match="cannot call size on undefined"):
        evaluate("Edge.all.selectOne(e|false).size()", g2)


def test_unknown_feature_error(g1):
    with pytest.raises(EvalError, match="unknown feature color on Edge") as exc:
        evaluate("Edge.all.first.color", g1)
    assert exc.value.location.line == 1


def test_collection_builtins(g1):
    assert evaluate("Sequence { 1, 2, 3 }.first") == 1
    assert evaluate("Sequence { 1, 2, 3 }.second") == 2
    assert evaluate("Sequence { 1 }.second") is Undefined
    assert evaluate("Sequence { }.first") is Undefined
    assert evaluate("Sequence { 1, 2 }.contains(2.0)") is True
    assert display(evaluate("Sequence { 1 }.add(1).add(2)")) == "Sequence {1, 1, 2}"
    assert display(evaluate("Set { 1 }.add(1).addAll(Sequence { 2, 1 })")) == "Set {1, 2}"
    assert display(evaluate("Sequence { 1, 2, 3 }.collect(x|x * x)")) == "Sequence {1, 4, 9}"
    assert display(evaluate("Set { 1, 2, 3 }.select(x|x <> 2)")) == "Set {1, 3}"
    assert evaluate("Sequence { 1, 2, 3 }.selectOne(x|x <> 1)") == 2
    assert evaluate("Sequence { 1, 2 }.exists(x|x == 5)") is False
    assert display(evaluate("Node.all.collect(n|n.name)", g1)) == "Sequence {n1, n2, n3, n4}"


def test_lambda_requires_boolean():
    with pytest.raises(EvalError, match="must be Boolean"):
        evaluate("Sequence { 1 }.select(x|x)")


def test_lambda_shadowing():
    assert run("var x = 10; Sequence { 1, 2 }.collect(x|x + 1).println(); x.println();") == "Sequence {2, 3}\n10\n"


def test_variables_and_scopes():
    assert run("var a = 1; if (true) { var a2 = a + 1; a = a2; } a.println();") == "2\n"
    with pytest.raises(EvalError, match="undeclared variable b"):
        run("b = 1;")
    with pytest.raises(EvalError, match="already declared"):
        run("var a = 1; var a = 2;")
    with pytest.raises(EvalError, match="undefined variable or type inner"):
        run("if (true) { var inner = 1; } inner.println();")


def test_typed_collection_declarations():
    assert run("var s : Sequence; var t : Set; var u : Integer; s.add(1); t.add(1); t.add(1);"
               "s.println(); t.println(); u.println();") == "Sequence {1}\nSet {1}\nundefined\n"


def test_for_continue_and_else():
    text = """
    for (i in Sequence { 1, 2, 3, 4 }) {
      for (j in Sequence { 1, 2 }) {
        if (j == 2) continue;
        if (i == 2) { continue; } else { i.println(); }
      }
    }
    """
    assert run(text) == "1\n3\n4\n"


def test_if_requires_boolean():
    with pytest.raises(EvalError, match="condition must be Boolean"):
        run("if (1) { }")


def test_for_over_non_collection():
    with pytest.raises(EvalError, match="cannot iterate"):
        run("for (x in 3) { }")


def test_user_operation_dispatch(g1):
    text = script("counting.eol") + "\nNode.all.select(n|n.name == 'n4').first.isIsolated().println();"
    assert run(text, g1).splitlines()[-1] == "true"


def test_operation_not_found():
    with pytest.raises(EvalError, match="operation isIsolated not found for Integer"):
        run("(5).isIsolated(); operation Node isIsolated() : Boolean { return true; }")


def test_most_specific_operation_wins():
    mm = parse_metamodel("class A {} class B extends A {} class C extends B {}")
    m = Model("M", mm)
    for c in "ABC":
        m.instantiate(c)
    text = """
    for (x in A.all) { x.who().println(); }
    operation A who() { return "A"; }
    operation B who() { return "B"; }
    operation Any who() { return "any"; }
    operation Integer who() { return "int"; }
    (1).who().println();
    "s".who().println();
    """
    assert run(text, m) == "A\nB\nB\nint\nany\n"


def test_operation_parameters_and_globals():
    text = """
    var base = 10;
    operation Integer plus(k : Integer) : Integer { return self + k; }
    operation twice(x) { return x * 2; }
    (3).plus(4).println();
    twice(5).println();
    operation Integer nothing() { }
    (1).nothing().println();
    """
    assert run(text) == "7\n10\nundefined\n"


def test_operations_do_not_see_caller_locals():
    text = """
    operation Integer peek() { return hidden; }
    if (true) { var hidden = 1; (1).peek(); }
    """
    with pytest.raises(EvalError, match="hidden"):
        run(text)


def test_cached_operation_runs_once(g1):
    ctx = Interpreter(repo(g1))
    program = parse_eol(
        "for (n in Node.all) { n.outgoing(); n.outgoing(); n.outgoing().size.println(); }\n"
        "@cached operation Node outgoing() : Collection(Edge) { return Edge.all.select(e|e.src == self); }"
    )
    result = ctx.run(program)
    assert result.stdout == "1\n2\n1\n0\n"
    runs = {k: v for k, v in ctx.body_runs.items() if k[0] == "outgoing"}
    assert runs == {("outgoing", f"Node#n{i}"): 1 for i in range(1, 5)}


def test_uncached_operation_runs_every_time(g1):
    ctx = Interpreter(repo(g1))
    ctx.run(parse_eol("var n = Node.all.first; n.f(); n.f();\noperation Node f() { return 1; }"))
    assert ctx.body_runs[("f", "Node#n1")] == 2


def test_cached_operation_keys_include_arguments():
    ctx = Interpreter(repo())
    out = ctx.run(parse_eol(
        "(1).add(1).println(); (1).add(2).println(); (1).add(1.0).println();\n"
        "@cached operation Integer add(k) { return self + k; }"
    ))
    assert out.stdout == "2\n3\n2\n"
    assert ctx.body_runs[("add", "1")] == 2


def test_model_qualified_context(graph_mm):
    a = parse_model('n : Node { name = "a" }', graph_mm, name="Left")
    b = parse_model('n : Node { name = "b" }', graph_mm, name="Right")
    text = """
    operation Left!Node side() { return "left"; }
    operation Node side() { return "any"; }
    Left!Node.all.first.side().println();
    Right!Node.all.first.side().println();
    """
    assert run(text, a, b) == "left\nany\n"
    with pytest.raises(EvalError, match="ambiguous type Node"):
        run("Node.all.println();", a, b)


def test_recursion_limit():
    with pytest.raises(EvalError, match="recursion"):
        run("operation Integer loop() { return self.loop(); } (1).loop();")


def test_new_and_assignment_errors(g1):
    with pytest.raises(EvalError, match="unknown type Nothing"):
        run("var x = new Nothing;", g1)
    with pytest.raises(EvalError, match="cannot set feature name of undefined"):
        run("var n; n.name = 'x';", g1)
    with pytest.raises(EvalError, match="type mismatch"):
        run("Node.all.first.name = 3;", g1)


def test_access_violation_flag(g1):
    g1.access = Access.READ
    result = run_program(parse_eol("Node.all.first.name = 'x';"), repo(g1))
    assert result.error is not None and result.error.is_access_violation
    assert g1.element("n1").slots["name"] == "n1"


def test_write_only_model_is_navigable():
    mm = parse_metamodel("class A { val b : B; } class B { attr x : Integer; }")
    m = Model("M", mm, Access.WRITE)
    run("var a = new A; a.b = new B; a.b.x = 3;", m)
    assert m.elements[1].slots["x"] == 3


def test_partial_stdout_kept_on_error():
    result = run_program(parse_eol("1.println(); 2.println(); (1/0).println(); 3.println();"), repo())
    assert result.stdout == "1\n2\n"
    assert "division by zero" in str(result.error)
    assert result.error.location.line == 1


def test_live_slot_collection_mutation(g1):
    run("var g = Graph.all.first; var n = new Node; n.name = 'n5'; g.nodes.add(n);", g1)
    assert [x.id for x in g1.element("g").slots["nodes"].items][-1] == "e5"
    assert g1.audit() == []


def test_select_returns_fresh_collection(g1):
    run("var s = Graph.all.first.nodes.select(n|true); s.add(Graph.all.first);", g1)
    assert len(g1.element("g").slots["nodes"]) == 4


def test_delete_statement_variants(g1):
    run("delete Edge.all.select(e|e.src == e.trg); var u; delete u;", g1)
    assert [e.id for e in g1.elements if e.eclass.name == "Edge"] == ["e1", "e2", "e3"]
    with pytest.raises(EvalError, match="cannot delete Integer"):
        run("delete 3;", g1)
    with pytest.raises(EvalError, match="deleted"):
        run("var n = Node.all.first; delete n; delete n;", g1)


def test_delete_collection_tolerates_cascade(g1):
    run("delete Sequence { Graph.all.first, Node.all.first };", g1)
    assert len(g1) == 0


def test_top_level_return_stops():
    assert run("1.println(); return; 2.println();") == "1\n"


def test_frame_lookup():
    outer = Frame()
    outer.vars["a"] = 1
    inner = Frame(outer)
    assert inner.lookup("a") == (True, 1)
    assert inner.assign("a", 2) and outer.vars["a"] == 2
    assert inner.lookup("b") == (False, None)


def test_cycle_script_on_g1(g1):
    assert run(script("cycles.eol"), g1) == (
        "Sequence {Sequence {Node#n1, Node#n2, Node#n3}, Sequence {Node#n2, Node#n3, Node#n1}, "
        "Sequence {Node#n3, Node#n1, Node#n2}}\n"
    )


def test_reverse_twice_is_identity(g1, graph_mm):
    before = g1.snapshot()
    run(script("reverse.eol"), g1)
    assert g1.snapshot() != before
    run(script("reverse.eol"), g1)
    assert g1.snapshot() == before


def test_delete_n1_on_g1(g1):
    run(script("delete_n1.eol"), g1)
    assert evaluate("Node.all.size", g1) == 3
    assert evaluate("Edge.all.select(e|e.src.isUndefined() or e.trg.isUndefined()).size", g1) == 2


def test_delete_node_and_edges_on_g1(g1):
    run(script("delete_n1_edges.eol"), g1)
    assert [e.id for e in g1.elements] == ["g", "n2", "n3", "n4", "e2", "e4"]


def test_build_graph_helper(graph_mm):
    m = build_graph(graph_mm, 3, [(0, 1), (1, 2)])
    assert evaluate("Edge.all.collect(e|e.src.name + e.trg.name)", m).items == ["n1n2", "n2n3"]
