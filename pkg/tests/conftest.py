from pathlib import Path

from clockrace import parse_file

CORPUS = Path(__file__).resolve().parent.parent / "corpus"

CORPUS_NAMES = [
    "jacobi",
    "gauss_seidel",
    "qr",
    "fig1a",
    "fig1b",
    "sor",
    "moldyn",
    "lufact",
]


def corpus_path(name: str) -> Path:
    return CORPUS / f"{name}.cx10"


def load(name: str):
    return parse_file(str(corpus_path(name)))
