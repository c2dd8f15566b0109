"""Session files and the command-line interface.

A session is a JSON document holding the base field, the symmetric
algebra (factor tables or quotient shorthands), named bimodules
(shorthand kinds expand to full action tables), the arrow bimodule as a
list of component names, the potential as coefficient-word terms, the
truncation degree, and an optional grading.  Scalars are serialized as
strings.  Commands: mutate, reduce, jacobian, ginzburg, valued, check.

Exit codes: 0 success, 2 validation failure, 3 theorem-scope violation.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import scalar as scalarmod
from .scalar import field_from_spec
from .algebra import AlgebraError, algebra_build
from .bimodule import (BimoduleError, Bimodule, direct_sum, dualize,
                       extension_tensor_bimodule, natural_bimodule)
from .pathalg import PathAlgebra, PathElement, PathError, format_element
from .qp import (ModulatedQP, NotSplitError, QPError, make_two_loop_free,
                 reduce_qp, skew_reduce, skew_kernel_certificate)
from .mutation import MutationError, involution_witness, mutate, normalize_at
from .ginzburg import GinzburgDGA
from . import valued as valuedmod


class SessionError(ValueError):
    pass


def _parse_coeffs(field, lst):
    return [field.parse(str(c)) for c in lst]


def build_bimodule(field, alg, spec, grading=None):
    kind = spec.get("kind", "natural")
    name = spec["name"]
    degrees = None
    if grading and name in grading.get("degrees", {}):
        degs = grading["degrees"][name]
        degrees = list(degs)
    if kind == "natural":
        i, j = spec["source"] - 1, spec["target"] - 1
        carrier = spec["carrier"] - 1
        le = None
        re_ = None
        if "left_embed" in spec:
            le = [_parse_coeffs(field, row) for row in spec["left_embed"]]
        if "right_embed" in spec:
            re_ = [_parse_coeffs(field, row) for row in spec["right_embed"]]
        if "conj" in spec:
            re_ = [_parse_coeffs(field, row) for row in spec["conj"]]
        if degrees is not None and len(degrees) == 1:
            degrees = degrees * alg.factors[carrier].dim
        return natural_bimodule(alg, i, j, carrier, left_embed=le, right_embed=re_,
                                name=name, degrees=degrees)
    if kind == "extension_tensor":
        i, j = spec["source"] - 1, spec["target"] - 1
        sub = [_parse_coeffs(field, row) for row in spec["subring"]]
        bim = extension_tensor_bimodule(alg, i, j, sub, name=name)
        if degrees is not None:
            if len(degrees) == 1:
                degrees = degrees * bim.dim
            bim = Bimodule(alg, bim.labels, bim.blocks, bim.left, bim.right,
                           degrees=degrees, name=name)
        return bim
    if kind == "table":
        labels = [str(x) for x in spec["basis"]]
        blocks = [(int(a) - 1, int(b) - 1) for a, b in spec["blocks"]]
        dim = len(labels)
        left = []
        right = []
        for s in range(alg.dim):
            lt = [[] for _ in range(dim)]
            rt = [[] for _ in range(dim)]
            left.append(lt)
            right.append(rt)
        for key, table in (("left", spec["left"]), ("right", spec["right"])):
            for slabel, rowspec in table.items():
                s = alg.labels.index(slabel)
                for i_str, entries in rowspec.items():
                    i = int(i_str)
                    tgt = (left if key == "left" else right)[s]
                    tgt[i] = [(int(j), field.parse(str(c))) for j, c in entries]
        if degrees is not None and len(degrees) == 1:
            degrees = degrees * dim
        return Bimodule(alg, labels, blocks, left, right, degrees=degrees, name=name)
    raise SessionError("unknown bimodule kind %r" % kind)


class Session:
    def __init__(self, doc):
        self.doc = doc
        self.field = field_from_spec(doc["base_field"])
        self.algebra = algebra_build(self.field, doc["algebra"])
        grading = doc.get("grading")
        self.grading = grading
        self.bimodules = {}
        for bspec in doc.get("bimodules", []):
            bim = build_bimodule(self.field, self.algebra, bspec, grading)
            self.bimodules[bspec["name"]] = bim
        arrows = []
        for entry in doc["arrows"]:
            if isinstance(entry, str):
                arrows.append((entry, self.bimodules[entry]))
            else:
                arrows.append((entry.get("as", entry["bimodule"]),
                               self.bimodules[entry["bimodule"]]))
        if not arrows:
            raise SessionError("session declares no arrow components")
        self.arrow_bimodule = direct_sum(arrows, name="B")
        self.pair = dualize(self.arrow_bimodule)
        self.maxdeg = doc.get("truncation", 8)
        self.A = PathAlgebra(self.pair, self.maxdeg)
        self.potential = self._build_potential(doc.get("potential"))
        grade = grading.get("n") if grading else None
        self.qp = ModulatedQP(self.pair, self.potential, self.maxdeg,
                              grade=grade, name=doc.get("name", "session"))
        cat_names = doc.get("catalog", list(self.bimodules))
        self.catalog = [(n, self.bimodules[n]) for n in cat_names]

    def component_offset(self, name):
        return self.arrow_bimodule.component_offsets[name][0]

    def _letter_element(self, letter):
        f = self.field
        A = self.A
        if isinstance(letter, list):
            name, idx = letter
            off = self.component_offset(name)
            return A.letter(off + int(idx))
        name = letter["bimodule"]
        off = self.component_offset(name)
        bim = self.bimodules[name]
        if letter.get("special") == "identity_tensor":
            vec = bim.identity_tensor
        else:
            vec = _parse_coeffs(f, letter["coeffs"])
        comps = {1: {(off + k,): c for k, c in enumerate(vec) if c != f.zero}}
        return PathElement(A.P, comps=comps, maxdeg=A.maxdeg)

    def _build_potential(self, pspec):
        A = self.A
        out = A.zero()
        if not pspec:
            return out
        for term in pspec.get("terms", []):
            coeff = self.field.parse(str(term.get("coeff", "1")))
            elem = A.one()
            for letter in term["word"]:
                elem = A.mul(elem, self._letter_element(letter))
            out = A.add(out, A.scale(coeff, elem))
        return out


def load(path) -> Session:
    with open(path) as fh:
        doc = json.load(fh)
    return Session(doc)


def loads(text) -> Session:
    return Session(json.loads(text))


# -- saving ------------------------------------------------------------------

def bimodule_to_table_spec(bim: Bimodule, name):
    alg = bim.algebra
    f = bim.field
    left = {}
    right = {}
    for s in range(alg.dim):
        lrow = {}
        rrow = {}
        for i in range(bim.dim):
            if bim.left[s][i]:
                lrow[str(i)] = [[j, f.to_str(c)] for j, c in bim.left[s][i]]
            if bim.right[s][i]:
                rrow[str(i)] = [[j, f.to_str(c)] for j, c in bim.right[s][i]]
        if lrow:
            left[alg.labels[s]] = lrow
        if rrow:
            right[alg.labels[s]] = rrow
    return {"name": name, "kind": "table",
            "basis": list(bim.labels),
            "blocks": [[i + 1, j + 1] for (i, j) in bim.blocks],
            "left": left, "right": right}


def session_doc_from_qp(session: Session, qp: ModulatedQP, idents=None, name=""):
    """New session document for a mutated or reduced modulated quiver."""
    f = session.field
    B = qp.pair.B
    groups = {}
    for i, blk in enumerate(B.blocks):
        groups.setdefault(blk, []).append(i)
    ident_by_block = {}
    for rec in idents or []:
        ident_by_block[rec["block"]] = rec
    comp_names = []
    bim_specs = [dict(b) for b in session.doc.get("bimodules", [])]
    known = {b["name"] for b in bim_specs}
    arrows = []
    letter_map = {}  # global letter -> (component name, local index via iso)
    counter = 0
    for blk in sorted(groups):
        idxs = groups[blk]
        rec = ident_by_block.get(blk)
        if rec and rec.get("name"):
            cname = rec["name"]
            inst = cname
            k = 2
            while inst in [a if isinstance(a, str) else a["as"] for a in arrows]:
                inst = "%s#%d" % (cname, k)
                k += 1
            arrows.append(inst if inst == cname else {"bimodule": cname, "as": inst})
            iso = rec["iso"]
            for loc, g in enumerate(idxs):
                letter_map[g] = (inst, [iso[t][loc] for t in range(len(idxs))])
        else:
            counter += 1
            cname = "M%d_%d%d" % (counter, blk[0] + 1, blk[1] + 1)
            sub_idx = idxs
            from .bimodule import sub_bimodule
            comp, _ = sub_bimodule(B, [B.basis_vec(i) for i in idxs], name=cname)
            spec = bimodule_to_table_spec(comp, cname)
            bim_specs.append(spec)
            arrows.append(cname)
            for loc, g in enumerate(idxs):
                vec = [f.zero] * len(idxs)
                vec[loc] = f.one
                letter_map[g] = (cname, vec)
    terms = []
    for d, ws in sorted(qp.m.comps.items()):
        for w, c in sorted(ws.items()):
            word = []
            coeffs_product = [("", None)]
            letters = []
            for i in w:
                cname, vec = letter_map[i]
                letters.append({"bimodule": cname,
                                "coeffs": [f.to_str(x) for x in vec]})
            terms.append({"coeff": f.to_str(c), "word": letters})
    doc = {
        "name": name or (qp.name or "session"),
        "base_field": session.field.spec(),
        "algebra": session.doc["algebra"],
        "bimodules": bim_specs,
        "arrows": arrows,
        "catalog": session.doc.get("catalog", [b["name"] for b in bim_specs]),
        "potential": {"terms": terms},
        "truncation": qp.maxdeg,
    }
    if session.grading:
        doc["grading"] = session.grading
    return doc


def save(doc, path):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


# -- commands ------------------------------------------------------------------

def cmd_mutate(args):
    session = load(args.infile)
    qp = session.qp
    if args.truncate:
        qp = ModulatedQP(qp.pair, qp.m, args.truncate, grade=qp.grade, name=qp.name)
    res = mutate(qp, args.at - 1, catalog=session.catalog)
    print("mutation at point %d" % args.at)
    print("  semi-mutation certificates: %s" % res.semi.certificates)
    print("  reduced potential: %s" % format_element(res.qp.m))
    for rec in res.idents:
        print("  component %s dim %d -> %s"
              % (rec["block"], rec["dim"], rec["name"] or "(unidentified)"))
    print("  truncation flag: %s" % res.qp.m.trunc)
    if args.out:
        doc = session_doc_from_qp(session, res.qp, res.idents,
                                  name="%s_mu%d" % (session.doc.get("name", "s"), args.at))
        save(doc, args.out)
        print("  wrote %s" % args.out)
    return 0


def cmd_reduce(args):
    session = load(args.infile)
    qp = make_two_loop_free(session.qp)
    td = qp.trivial_data()
    print("trivial part: dim U = %d, dim V = %d, split = %s"
          % (len(td["U"]), len(td["V"]), td["split"]))
    if td["split"]:
        res = reduce_qp(qp)
        print("reduced potential: %s" % format_element(res.qp_red.m))
        print("kernel layer ranks: %s"
              % [res.kernel.layer_rank(l) for l in range(1, res.kernel.maxdeg + 1)])
        if args.out:
            doc = session_doc_from_qp(session, res.qp_red, name="reduced")
            save(doc, args.out)
            print("wrote %s" % args.out)
        return 0
    res = skew_reduce(qp)
    print("skew reduction; defect ideal generators: %d" % len(res.i0_gens))
    print("reduced potential: %s" % format_element(res.qp_red.m))
    ok, _ = skew_kernel_certificate(res)
    print("kernel equals the derivative ideal per degree: %s" % ok)
    return 0 if ok else 3


def cmd_jacobian(args):
    session = load(args.infile)
    jac = session.qp.jacobian()
    dims = jac.quotient_dims()
    print("quotient dimensions by degree: %s" % dims)
    print("finiteness: %s" % jac.finiteness())
    return 0


def cmd_ginzburg(args):
    session = load(args.infile)
    dga = GinzburgDGA(session.qp, n=args.n)
    print("hat bimodule dimension: %d" % dga.Bhat.dim)
    code = 0
    if args.check_d2:
        bad = dga.d_squared_on_generators()
        print("d^2 on generators: %s" % ("all zero" if not bad else "NONZERO"))
        if bad:
            code = 2
        import random
        rng = random.Random(args.seed)
        fails = 0
        for _ in range(args.samples):
            x = _random_hat_element(dga, rng)
            if not dga.d_squared_on(x).is_zero():
                fails += 1
        print("d^2 on %d random products: %s"
              % (args.samples, "all zero" if not fails else "%d nonzero" % fails))
        if fails:
            code = 2
    if args.h0:
        dims = dga.h0_dims()
        jac = session.qp.jacobian().quotient_dims()
        print("H0 dims: %s" % dims)
        print("Jacobian dims: %s" % jac)
        if dims != jac[:len(dims)]:
            code = 2
    return code


def _random_hat_element(dga, rng, max_factors=3):
    A = dga.A
    letters = list(range(dga.Bhat.dim))
    out = A.zero()
    for _ in range(rng.randint(1, 2)):
        word = [rng.choice(letters) for _ in range(rng.randint(1, max_factors))]
        elem = A.one()
        for i in word:
            elem = A.mul(elem, A.letter(i))
        out = A.add(out, A.scale(A.field.from_int(rng.randint(-2, 2)), elem))
    return out


def cmd_valued(args):
    with open(args.infile) as fh:
        doc = json.load(fh)
    if "matrix" in doc:
        b = doc["matrix"]
        sym = doc.get("symmetrizer")
        out = valuedmod.matrix_mutate(b, args.at - 1, sym)
        print("mutated matrix:")
        for row in out:
            print("  %s" % row)
        if args.out:
            save({"matrix": out, "symmetrizer": sym}, args.out)
        return 0
    points = doc["points"]
    arrows = {}
    for rec in doc["valued_arrows"]:
        arrows.setdefault((rec["from"], rec["to"]), []).append(tuple(rec["val"]))
    q = valuedmod.vq_normal_form(points, arrows,
                                 doc.get("symmetrizer"))
    out = valuedmod.vq_mutate(q, args.at)
    print("mutated quiver: %s" % out)
    if not getattr(out, "matrix_representable", True):
        print("warning: result contains a 2-cycle (not matrix representable)")
    return 0


def cmd_check(args):
    from . import suites
    runner = getattr(suites, "suite_" + args.suite.replace("-", "_"), None)
    if runner is None:
        print("unknown suite %r" % args.suite)
        return 2
    session = load(args.infile) if args.infile else None
    failures = runner(seed=args.seed, session=session, cases=args.cases)
    for name, ok in failures:
        print("%-58s %s" % (name, "pass" if ok else "FAIL"))
    bad = [n for n, ok in failures if not ok]
    print("%d checks, %d failures" % (len(failures), len(bad)))
    return 0 if not bad else 2


def main(argv=None):
    ap = argparse.ArgumentParser(prog="mqpot",
                                 description="modulated quivers with potentials")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mutate", help="mutate at a point and write a new session")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--at", type=int, required=True, help="factor index, 1-based")
    p.add_argument("--out")
    p.add_argument("--truncate", type=int)
    p.set_defaults(func=cmd_mutate)

    p = sub.add_parser("reduce", help="split or skew reduction of the session potential")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("jacobian", help="Jacobian quotient dimensions per degree")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--dims", action="store_true")
    p.set_defaults(func=cmd_jacobian)

    p = sub.add_parser("ginzburg", help="Ginzburg dg-algebra checks")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--check-d2", action="store_true")
    p.add_argument("--h0", action="store_true")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_ginzburg)

    p = sub.add_parser("valued", help="combinatorial mutation")
    p.add_argument("action", choices=["mutate"])
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--at", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_valued)

    p = sub.add_parser("check", help="seeded invariant suites")
    p.add_argument("--suite", default="invariants")
    p.add_argument("--in", dest="infile")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cases", type=int, default=50)
    p.set_defaults(func=cmd_check)

    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except NotSplitError as exc:
        print("theorem-scope violation: %s" % exc, file=sys.stderr)
        return 3
    except (AlgebraError, BimoduleError, PathError, QPError, MutationError,
            valuedmod.ValuedError, SessionError, json.JSONDecodeError) as exc:
        print("validation failure: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
