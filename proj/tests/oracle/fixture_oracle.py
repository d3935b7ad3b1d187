#!/usr/bin/env python3
"""Hand-enumeration oracle for the scripted fixture repositories.

Reads the scripts (fixtures.json) and derives the expected ledger, developer
classes, expert sets, Gini and precision/recall by replaying the edit
operations directly. It shares no code with the C++ pipeline and never looks
at a Git diff.
"""
import argparse
import json
import math
import re
import sys
from fractions import Fraction

SOURCE_EXTS = (".c", ".h", ".cpp", ".cc", ".cxx", ".hpp", ".hh", ".hxx", ".inl")
KEYWORDS = {
    "auto", "break", "case", "char", "const", "continue", "default", "do", "double", "else", "enum",
    "extern", "float", "for", "goto", "if", "inline", "int", "long", "register", "restrict", "return",
    "short", "signed", "sizeof", "static", "struct", "switch", "typedef", "union", "unsigned", "void",
    "volatile", "while", "true", "false", "bool", "nullptr", "alignas", "alignof", "static_assert",
    "thread_local", "typeof", "constexpr", "defined",
}


def is_source(path):
    name = path.rsplit("/", 1)[-1].lower()
    return any(name.endswith(e) and len(name) > len(e) for e in SOURCE_EXTS)


def dev_key(author):
    email = author["email"].strip().lower()
    return email if email else author["name"].strip().lower()


def directive(line):
    """(keyword, argument) for a conditional directive, else None. Fixtures use
    single-line comments only, which is all this oracle needs to understand."""
    code = re.sub(r"/\*.*?\*/", " ", line)
    code = code.split("//", 1)[0]
    m = re.match(r"\s*#\s*(ifdef|ifndef|if|elif|else|endif|define)\b(.*)$", code)
    if not m:
        return None
    return m.group(1), m.group(2).strip()


def constants_of(kind, arg):
    if kind in ("ifdef", "ifndef"):
        m = re.match(r"[A-Za-z_]\w*", arg)
        return {m.group(0)} if m else set()
    return {t for t in re.findall(r"[A-Za-z_]\w*", arg) if t not in KEYWORDS}


def classify(lines):
    """Per-line True (variable) / False (mandatory) plus the constants."""
    dirs = [(i, directive(l)) for i, l in enumerate(lines)]
    dirs = [(i, d) for i, d in dirs if d is not None]
    guard = None
    if len(dirs) >= 3 and dirs[0][1][0] == "ifndef" and dirs[1][1][0] == "define":
        name = dirs[0][1][1].split()[0] if dirs[0][1][1] else ""
        if dirs[1][1][1].split()[:1] == [name]:
            # the #endif closing the first frame must be the last directive
            depth, close, branches = 0, None, False
            for i, (k, _) in dirs:
                if k in ("if", "ifdef", "ifndef"):
                    depth += 1
                elif k in ("elif", "else") and depth == 1:
                    branches = True
                elif k == "endif":
                    depth -= 1
                    if depth == 0:
                        close = i
                        break
            if close is not None and close == dirs[-1][0] and not branches:
                guard = (dirs[0][0], close, name)
    variable = [False] * len(lines)
    constants = set()
    depth = 0
    for i, line in enumerate(lines):
        d = directive(line)
        if guard and i in (guard[0], guard[1]):
            continue
        before = depth
        if d:
            kind, arg = d
            if kind in ("if", "ifdef", "ifndef"):
                depth += 1
                constants |= constants_of(kind, arg)
            elif kind == "elif":
                constants |= constants_of(kind, arg)
            elif kind == "endif":
                depth -= 1
        variable[i] = before > 0 or depth > 0
    if guard:
        constants.discard(guard[2])
    return variable, constants


class Ledger:
    def __init__(self):
        self.parent = {}
        self.path_id = {}      # live path -> identity (deleted paths stay)
        self.creator = {}      # identity -> developer of first creation
        self.next_id = 0

    def find(self, i):
        while self.parent[i] != i:
            i = self.parent[i]
        return i

    def new(self):
        self.parent[self.next_id] = self.next_id
        self.next_id += 1
        return self.next_id - 1

    def identity(self, path, old_path=None):
        if old_path is not None:
            src = self.path_id.get(old_path)
            if src is None:
                src = self.new()
            if path in self.path_id:
                dst = self.path_id[path]
                a, b = self.find(src), self.find(dst)
                if a != b:
                    self.parent[b] = a
            self.path_id[path] = src
            return self.find(src)
        if path not in self.path_id:
            self.path_id[path] = self.new()
        return self.find(self.path_id[path])


def replay(repo):
    trees = {}
    fork_base = {}
    ledger = Ledger()
    files = {}     # identity -> {"commits": [...devs per commit], ...}
    entries = {}   # (identity, dev) -> counters
    alive_path = {}
    developers = set()
    non_merge = 0
    events = []    # (identity, dev, created?)

    def entry(ident, dev):
        return entries.setdefault((ident, dev), {"variable_touches": 0, "mandatory_touches": 0,
                                                 "commit_count": 0})

    for c in repo["commits"]:
        branch = c["branch"]
        if branch not in trees:
            trees[branch] = dict(trees[c["fork_from"]]) if c["fork_from"] else {}
            fork_base[branch] = dict(trees[branch])
        tree = trees[branch]
        if c["merge_from"]:
            other, base = trees[c["merge_from"]], fork_base[c["merge_from"]]
            for p in set(other) | set(base):
                if other.get(p) != base.get(p):
                    if p in other:
                        tree[p] = other[p]
                    else:
                        tree.pop(p, None)
            continue
        non_merge += 1
        dev = dev_key(c["author"])
        developers.add(dev)
        touched = {}   # final path -> [pre_path, pre_lines, var, mand, created]
        renamed_from = {}
        for op in c["ops"]:
            kind, path = op["kind"], op["path"]
            if kind == "rename":
                renamed_from[op["new_path"]] = path
                tree[op["new_path"]] = tree.pop(path)
                if path in touched:
                    touched[op["new_path"]] = touched.pop(path)
                continue
            pre = tree.get(path)
            rec = touched.setdefault(path, {"var": 0, "mand": 0, "created": kind == "create",
                                            "deleted": False})
            pre_var = classify(pre)[0] if pre is not None else []
            if kind == "create":
                post = list(op["lines"])
                tree[path] = post
                added = range(1, len(post) + 1)
                removed = []
            elif kind == "delete_file":
                removed = range(1, len(pre) + 1)
                added = []
                del tree[path]
                rec["deleted"] = True
            elif kind == "insert":
                post = pre[: op["line"] - 1] + op["lines"] + pre[op["line"] - 1:]
                tree[path] = post
                added = range(op["line"], op["line"] + len(op["lines"]))
                removed = []
            elif kind == "delete":
                post = pre[: op["line"] - 1] + pre[op["line"] - 1 + op["count"]:]
                tree[path] = post
                added = []
                removed = range(op["line"], op["line"] + op["count"])
            elif kind == "replace":
                post = pre[: op["line"] - 1] + op["lines"] + pre[op["line"] - 1 + op["count"]:]
                tree[path] = post
                added = range(op["line"], op["line"] + len(op["lines"]))
                paired = min(op["count"], len(op["lines"]))
                removed = range(op["line"] + paired, op["line"] + op["count"])
            else:
                raise ValueError(kind)
            post_var = classify(tree[path])[0] if path in tree else []
            for ln in added:
                rec["var" if post_var[ln - 1] else "mand"] += 1
            for ln in removed:
                rec["var" if pre_var[ln - 1] else "mand"] += 1
        paths = set(touched) | set(renamed_from)
        idents = set()
        for path in sorted(paths):
            old = renamed_from.get(path)
            if not (is_source(path) or (old and is_source(old))):
                continue
            ident = ledger.identity(path, old)
            rec = touched.get(path, {"var": 0, "mand": 0, "created": False, "deleted": False})
            if rec["created"]:
                ledger.creator.setdefault(ident, dev)
            e = entry(ident, dev)
            e["variable_touches"] += rec["var"]
            e["mandatory_touches"] += rec["mand"]
            idents.add(ident)
        for ident in {ledger.find(i) for i in idents}:
            f = files.setdefault(ident, {"total_commits": 0, "changed_by": set()})
            f["total_commits"] += 1
            f["changed_by"].add(dev)
            entry(ident, dev)["commit_count"] += 1

    # Fold merged identities onto their roots.
    final = {}
    root_path = {}
    for path, ident in ledger.path_id.items():
        root_path.setdefault(ledger.find(ident), [])
    for path, ident in sorted(ledger.path_id.items()):
        root_path[ledger.find(ident)].append(path)
    head = trees["main"]
    ledger_files = {}
    for ident, f in files.items():
        root = ledger.find(ident)
        paths = root_path[root]
        live = [p for p in paths if p in head]
        path = live[0] if live else paths[-1]
        ledger_files[root] = {"path": path, "alive": bool(live), **f}
    out_entries = {}
    for (ident, dev), e in entries.items():
        root = ledger.find(ident)
        path = ledger_files[root]["path"]
        cur = out_entries.setdefault((path, dev), {"variable_touches": 0, "mandatory_touches": 0,
                                                   "commit_count": 0, "first_author": False})
        for k in ("variable_touches", "mandatory_touches", "commit_count"):
            cur[k] += e[k]
    for root, f in ledger_files.items():
        creator = ledger.creator.get(root)
        f["first_author"] = creator
        f["variable_contributors"] = sorted({dev for (p, dev), e in out_entries.items()
                                             if p == f["path"] and e["variable_touches"] > 0})
        if creator:
            out_entries[(f["path"], creator)]["first_author"] = True
    return head, ledger_files, out_entries, developers, non_merge


def evaluate(experts, truth):
    files = sorted(set(experts) | set(truth))
    tp = fp = fn = 0
    p_sum, p_n, r_sum, r_n = Fraction(0), 0, Fraction(0), 0
    for f in files:
        e, t = experts.get(f, set()), truth.get(f, set())
        ftp = len(e & t)
        tp, fp, fn = tp + ftp, fp + len(e - t), fn + len(t - e)
        if e:
            p_sum += Fraction(ftp, len(e))
            p_n += 1
        if t:
            r_sum += Fraction(ftp, len(t))
            r_n += 1
    micro = {"precision": float(Fraction(tp, tp + fp)) if tp + fp else 0.0,
             "recall": float(Fraction(tp, tp + fn)) if tp + fn else 0.0}
    macro = {"precision": float(p_sum / p_n) if p_n else 0.0,
             "recall": float(r_sum / r_n) if r_n else 0.0}
    return {"tp": tp, "fp": fp, "fn": fn, "micro": micro, "macro": macro}


def expected_for(repo):
    head, files, entries, developers, non_merge = replay(repo)
    by_dev = {}
    for (path, dev), e in entries.items():
        d = by_dev.setdefault(dev, [0, 0])
        d[0] += e["variable_touches"]
        d[1] += e["mandatory_touches"]
    classes = {}
    for dev, (v, m) in by_dev.items():
        if v and m:
            classes[dev] = "mixed"
        elif v:
            classes[dev] = "specialist"
        elif m:
            classes[dev] = "generalist"
    population = sorted(d for d, c in classes.items() if c != "generalist")

    values = [by_dev[d][0] for d in population]
    gini = None
    if values and sum(values) > 0:
        n = len(values)
        diff = sum(abs(a - b) for a in values for b in values)
        gini = float(Fraction(diff, 2 * n * n) / Fraction(sum(values), n))

    head_src = {p: lines for p, lines in head.items() if is_source(p)}
    total = variable = 0
    consts = set()
    head_var = {}
    for p, lines in head_src.items():
        var, cs = classify(lines)
        total += len(lines)
        variable += sum(var)
        consts |= cs
        head_var[p] = sum(var)

    experts = {"doa": {}, "ownership": {}}
    truth = {}
    alive = {f["path"]: f for f in files.values() if f["alive"] and f["path"] in head_src}
    for path, f in sorted(alive.items()):
        total_commits = f["total_commits"]
        scores = {}
        for dev in f["changed_by"]:
            e = entries[(path, dev)]
            fa = 1 if e["first_author"] else 0
            dl = e["commit_count"]
            ac = total_commits - dl
            scores[dev] = 3.293 + 1.098 * fa + 0.164 * dl - 0.321 * math.log1p(ac)
        top = max(scores.values())
        authors = {d for d, s in scores.items() if top > 0 and s / top > 0.75 and s >= 3.293}
        majors = {d for d in f["changed_by"] if 100 * entries[(path, d)]["commit_count"] / total_commits > 5}
        experts["doa"][path] = authors
        experts["ownership"][path] = majors

    evaluations = {}
    evaluated = [p for p in alive if head_var[p] >= 1]
    for p in evaluated:
        truth[p] = set(alive[p]["variable_contributors"])
    for metric in ("doa", "ownership"):
        filtered = {p: experts[metric][p] & set(population) for p in evaluated}
        evaluations[metric] = evaluate(filtered, truth) if evaluated else None

    return {
        "name": repo["name"],
        "commits": non_merge,
        "developers": len(developers),
        "files": len(head_src),
        "total_loc": total,
        "variable_loc": variable,
        "constants": sorted(consts),
        "ledger": [dict(path=p, developer_key=d, **e) for (p, d), e in sorted(entries.items())],
        "files_table": [{"path": f["path"], "total_commits": f["total_commits"],
                         "changed_by": sorted(f["changed_by"]),
                         "variable_contributors": f["variable_contributors"],
                         "first_author": f["first_author"], "alive": f["alive"]}
                        for f in sorted(files.values(), key=lambda f: f["path"])],
        "classes": dict(sorted(classes.items())),
        "class_counts": {k: sum(1 for c in classes.values() if c == k)
                         for k in ("generalist", "specialist", "mixed")},
        "experts": {m: {p: sorted(s) for p, s in sorted(experts[m].items())} for m in experts},
        "gini": gini,
        "evaluated_files": sorted(evaluated),
        "evaluation": evaluations,
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("fixtures", help="fixtures.json written by `varexp fixtures generate`")
    ap.add_argument("-o", "--out", help="write here instead of stdout")
    args = ap.parse_args()
    with open(args.fixtures, encoding="utf-8") as fh:
        scripts = json.load(fh)
    doc = {"repos": [expected_for(r) for r in scripts["repos"]]}
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    main()
