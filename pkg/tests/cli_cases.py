"""Small fixed argument lists covering every subcommand."""

CASES = {
    "curvature": ["curvature", "--family", "aniso2d", "--omega", "-0.1*R^2", "--grid", "9"],
    "annulus-iso": ["annulus-iso", "--omega", "0.1*R", "--grid", "64"],
    "annulus-aniso": ["annulus-aniso", "--omega", "-0.05*R", "--r2", "1.5", "--mode", "paper-exact", "--grid", "64"],
    "sphere": ["sphere", "--omega", "0.1*R", "--grid", "64"],
    "stressfree-2d": ["stressfree-2d", "--omega", "X1^2-X2^2", "--grid", "33"],
    "stressfree-3d": ["stressfree-3d", "--omega", "-ln(0.7*((X1+2)^2+(X2+2)^2+(X3+2)^2))", "--grid", "17"],
    "embed": ["embed", "--omega", "-R", "--range", "0", "3", "--samples", "32", "--n-theta", "16"],
    "evolve": ["evolve", "--stretch", "1.1", "1", "0.9", "--t-end", "0.05", "--dt", "0.01"],
    "linearized": ["linearized", "--beta", "0.3*X1-0.7*X2+0.5*X3", "--boundary", "eigenstrain", "--grid", "9"],
    "decompose-check": ["decompose-check", "--samples", "50"],
}


def output_args(name, tmp):
    """Output flag pointing into ``tmp``; embed writes ``prefix.obj`` and ``prefix_profile.csv``."""
    return ["-o", str(tmp / ("mesh" if name == "embed" else "out.csv"))]


def read_outputs(name, tmp):
    if name == "embed":
        return {p: (tmp / p).read_bytes() for p in ("mesh.obj", "mesh_profile.csv")}
    return {"out.csv": (tmp / "out.csv").read_bytes()}
