import hypothesis
import numpy as np
import pytest

from josh.corpus import Vocabulary

hypothesis.settings.register_profile("ci", deadline=None, max_examples=50)
hypothesis.settings.register_profile("fast", deadline=None, max_examples=10)
hypothesis.settings.load_profile("ci")

# arts/sports/science with two children each
DEMO_EDGES = [
    ("ROOT", "arts"), ("ROOT", "sports"), ("ROOT", "science"),
    ("arts", "music"), ("arts", "dance"),
    ("sports", "baseball"), ("sports", "soccer"),
    ("science", "physics"), ("science", "chemistry"),
]


def unit_rows(rng, n, p):
    x = rng.standard_normal((n, p))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def demo_vocab():
    names = sorted({n for e in DEMO_EDGES for n in e} - {"ROOT"})
    return Vocabulary(names + ["filler"], np.full(len(names) + 1, 10))


@pytest.fixture
def demo_file(tmp_path):
    path = tmp_path / "demo.tsv"
    path.write_text("# user hierarchy\n" + "".join(f"{p}\t{c}\n" for p, c in DEMO_EDGES), encoding="utf-8")
    return path


def write_corpus(tmp_path, lines, name="corpus.txt"):
    path = tmp_path / name
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


# criterion number -> (title, passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {num}. {title}: {detail}")
