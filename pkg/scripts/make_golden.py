"""Regenerate the operator dumps in tests/golden (L_1, L_2 per model, G_2 for three-halves)."""

from pathlib import Path

from lsvtaylor.expansion import build_Gn, build_Ln
from lsvtaylor.model import load_model

ROOT = Path(__file__).resolve().parents[1]
MODELS = {"three_halves": "fig2_three_halves.txt", "heston": "fig1_heston.txt",
          "jdcev": "fig3_jdcev_c20.txt"}


def main():
    out = ROOT / "tests" / "golden"
    out.mkdir(parents=True, exist_ok=True)
    for name, fname in MODELS.items():
        model = load_model(ROOT / "models" / fname)
        for n in (1, 2):
            (out / f"{name}_L{n}.txt").write_text(build_Ln(model, n).dump())
    model = load_model(ROOT / "models" / MODELS["three_halves"])
    U = model.universe
    (out / "three_halves_G2.txt").write_text(build_Gn(model, 2, U.t, U.s(1)).dump())
    print(f"wrote goldens to {out}")


if __name__ == "__main__":
    main()
