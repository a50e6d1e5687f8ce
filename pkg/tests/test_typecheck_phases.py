import numpy as np
import pytest

from corpus import MERGED_FORCES, plain_grid, spring_runtime
from relsim import types as T
from relsim.engine import ExecConfig, Kernel
from relsim.errors import ExpansionError, KernelTypeError, PhaseError
from relsim.lang import parse_kernel
from relsim.sim.spring_mass import chain_mesh

SPRING_PHASES = {
    "initLen": {"pos": "ReadOnly", "rest_len": "Exclusive"},
    "computeInternalForces": {"q": "ReadOnly", "rest_len": "ReadOnly", "force": "Reduce(+)"},
    "applyForces": {"force": "Exclusive", "mass": "ReadOnly", "q": "Exclusive", "qd": "Exclusive"},
    "measureTotalEnergy": {"mass": "ReadOnly", "qd": "ReadOnly"},
}


@pytest.fixture
def spring():
    rt, dom, ks = spring_runtime(*chain_mesh())
    rt.create_field(dom.vertices, "mat", T.matrix("float64", 3, 3), np.eye(3))
    rt.create_field(dom.vertices, "n", T.int64, 0)
    rt.new_global("M", T.float64, 0.0)
    return rt, dom, ks


def compile_(rt, src):
    return Kernel(rt, parse_kernel(src))


def test_spring_kernel_phases(spring):
    rt, dom, ks = spring
    for name, want in SPRING_PHASES.items():
        assert ks[name].phases.data_fields() == want, name
    assert str(ks["measureTotalEnergy"].phases["E"]) == "Reduce(+)"
    assert ks["initLen"].phases.key_fields == {"edges.head", "edges.tail"}


def test_merged_force_kernel_rejected(spring):
    rt, _, _ = spring
    with pytest.raises(PhaseError) as info:
        rt.kernels(MERGED_FORCES)
    err = info.value
    assert "vertices.force" in err.fields
    force = next(c for c in err.conflicts if c.field == "vertices.force")
    assert "force" in force.message and len(force.sites) == 2
    # the fused kernel also reads q through e.head while updating it
    assert set(err.fields) == {"vertices.force", "vertices.q"}


ACCEPT = [
    # (body over vertices or edges, field, expected phase)
    ("v", "v.force += {1.0, 0, 0}", "vertices.force", "Exclusive"),
    ("e", "e.head.force += {1.0, 0, 0}\n e.tail.force += {1.0, 0, 0}", "vertices.force", "Reduce(+)"),
    ("v", "v.force += {1.0, 0, 0}\n for e in v.edges do\n e.head.force += {1.0, 0, 0}\n end",
     "vertices.force", "Reduce(+)"),
    ("v", "M max= v.mass", "M", "Reduce(max)"),
    ("e", "e.rest_len = L.len(e.head.q - e.tail.q) + L.len(e.head.q)", "vertices.q", "ReadOnly"),
    ("v", "v.q = v.mat * v.q", "vertices.q", "Exclusive"),
    ("v", "v.mass = 1 / 2", "vertices.mass", "Exclusive"),
    ("v", "v.q = v.q + v.qd * dt\n v.qd = {0, 0, 0}", "vertices.qd", "Exclusive"),
    ("v", "var b = v.mass < 1 and true", "vertices.mass", "ReadOnly"),
    ("v", "var s = 0.0\n for e in v.edges do\n s = s + e.rest_len\n end\n v.mass = s",
     "edges.rest_len", "ReadOnly"),
    ("v", "for e in v.edges do\n M min= e.rest_len\n end", "M", "Reduce(min)"),
    ("v", "v.mass *= 2.0", "vertices.mass", "Exclusive"),
]


@pytest.mark.parametrize("param, body, name, phase", ACCEPT)
def test_accept_cases(spring, param, body, name, phase):
    rel = "vertices" if param == "v" else "edges"
    k = compile_(spring[0], f"kernel k({param} : {rel})\n {body}\nend")
    assert str(k.phases[name]) == phase


REJECT = [
    ("e", "e.head.q = {0, 0, 0}", PhaseError, "only centered writes"),
    ("e", "e.head.mass += 1.0\n e.tail.mass max= 1.0", PhaseError, "one operator"),
    ("e", "e.head.mass += 1.0\n e.rest_len = e.tail.mass", PhaseError, "cannot also be read"),
    ("v", "E += v.mass\n v.mass = E", PhaseError, "global cannot be read"),
    ("v", "E += v.mass\n E max= v.mass", PhaseError, "one operator"),
    ("v", "E = v.mass", KernelTypeError, "can only be reduced"),
    ("v", "K += v.mass", KernelTypeError, "constant"),
    ("e", "var x = e.head + 1", KernelTypeError, "key values"),
    ("v", "v.q = v.q * v.qd", KernelTypeError, "L.dot"),
    ("v", "v.n = 1 / 2", KernelTypeError, "cannot assign float64"),
    ("v", "v.mass = v.q", KernelTypeError, "cannot assign vec3"),
    ("v", "v.mass = v.nope", ExpansionError, "no field"),
    ("v", "v.mass = zz", KernelTypeError, "unknown name"),
    ("v", "v.mass = v.q[3]", KernelTypeError, "out of range"),
    ("v", "for e in v.q do\n end", KernelTypeError, "query"),
    ("v", "var b = not v.mass", KernelTypeError, "needs a bool"),
    ("v", "v.mass = L.dot(v.q, {1.0, 2.0})", KernelTypeError, "equal length"),
    ("v", "v.q = L.cross({1.0, 0.0}, {0.0, 1.0})", KernelTypeError, "3-vectors"),
    ("v", "var a = 1\n var a = 2", KernelTypeError, "already declared"),
    ("v", "var a = 1.0\n a = v.q", KernelTypeError, "cannot assign vec3"),
]


@pytest.mark.parametrize("param, body, exc, text", REJECT)
def test_reject_cases(spring, param, body, exc, text):
    rel = "vertices" if param == "v" else "edges"
    with pytest.raises(exc) as info:
        compile_(spring[0], f"kernel k({param} : {rel})\n {body}\nend")
    assert text in str(info.value)
    assert info.value.span is not None and info.value.span.line >= 2


def test_grid_stencil_phases():
    rt, g = plain_grid()
    k = compile_(rt, "kernel k(c : cells)\n c.out = c(1,0).val - c.val\nend")
    assert k.phases.data_fields() == {"val": "ReadOnly", "out": "Exclusive"}
    k = compile_(rt, "kernel k(c : cells)\n c(1,0).out += c.val\nend")
    assert str(k.phases["out"]) == "Reduce(+)"
    with pytest.raises(PhaseError, match="only be read through its parameter"):
        compile_(rt, "kernel k(c : cells)\n c.val = c(1,0).val\nend")


def test_error_span_points_at_offending_node(spring):
    with pytest.raises(KernelTypeError) as info:
        compile_(spring[0], "kernel k(v : vertices)\n  v.q = v.q * v.qd\nend")
    # binary-operator errors point at the operator
    assert (info.value.span.line, info.value.span.col) == (2, 13)


def test_int_division_promotes_to_float(spring):
    rt, dom, _ = spring
    k = compile_(rt, "kernel k(v : vertices)\n v.mass = 7 / 2\nend")
    k(dom.vertices)
    assert np.all(dom.vertices["mass"].data == 3.5)


def test_vector_blockers_reported_and_fallback_matches(spring):
    rt, dom, _ = spring
    v = dom.vertices
    src = "kernel k(v : vertices)\n for e in v.edges do\n v.mass = e.rest_len + 1\n end\nend"
    k = compile_(rt, src)
    assert not k.vectorizable
    assert any("assigned inside a loop" in b for b in k.typed.vector_blockers)
    k(v)
    got = v["mass"].data.copy()
    v["mass"].data[:] = 0
    k(v, ExecConfig(backend="reference"))
    assert np.array_equal(got, v["mass"].data)

    k = compile_(rt, "kernel k(v : vertices)\n var s = 0.0\n for e in v.edges do\n"
                     " s = s + e.rest_len\n end\n v.mass = s\nend")
    assert any("updated inside a loop" in b for b in k.typed.vector_blockers)
    assert compile_(rt, "kernel k(v : vertices)\n v.mass = 1.0\nend").vectorizable
