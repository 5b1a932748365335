"""Hypothesis strategy for random, always-probabilistic system specs.

Each state's branch weights are scaled so their sum never exceeds 1 at any
occupancy, which keeps K(m) row-stochastic everywhere on the simplex.
"""

from hypothesis import strategies as st


@st.composite
def spec_texts(draw, max_states=4, max_pop=3):
    n = draw(st.integers(1, max_states))
    names = [f"C{i}" for i in range(n)]
    lines, probs = [], []
    for i, c in enumerate(names):
        k = draw(st.integers(1, 3))
        branches = []
        for j in range(k):
            a = f"a{i}_{j}"
            target = draw(st.sampled_from(names))
            branches.append(f"{a}.{target}")
            w = round(draw(st.floats(0, 1)) / k, 6)
            other = draw(st.sampled_from(names))
            shape = draw(st.integers(0, 3))
            expr = [f"{w}", f"{w} * frc {other}", f"min({w}, frc {other})",
                    f"max(0, {w} - frc {other})"][shape]
            probs.append(f"{a} :: {expr};")
        lines.append(f"{c} := {' + '.join(branches)};")
    counts = draw(st.lists(st.integers(0, max_pop), min_size=n, max_size=n))
    if sum(counts) == 0:
        counts[0] = 1
    init = ", ".join(f"{c}[{m}]" for c, m in zip(names, counts))
    lab = f"label local here = {names[0]};\nlabel global crowd = frc {names[-1]} > 0.3;"
    return "\n".join(lines + probs + [lab, f"init <{init}>;"])
