"""Generate a white-wine-quality-shaped table (4898 rows, 12 columns).

The public UCI white wine file is not vendored here; this script produces a
deterministic stand-in with the same schema, row count, class counts and
approximate marginal moments and correlations.
"""
import numpy as np

COLS = ["fixed acidity", "volatile acidity", "citric acid", "residual sugar",
        "chlorides", "free sulfur dioxide", "total sulfur dioxide", "density",
        "pH", "sulphates", "alcohol"]
MEAN = [6.855, 0.278, 0.334, 6.391, 0.0458, 35.31, 138.36, 0.99403, 3.188, 0.490, 10.514]
SD = [0.844, 0.101, 0.121, 5.072, 0.0218, 17.01, 42.50, 0.00299, 0.151, 0.114, 1.231]
SKEWED = {1, 3, 4, 5, 9}
DECIMALS = [1, 3, 2, 2, 3, 1, 0, 5, 2, 2, 2]
LO = [3.8, 0.08, 0.0, 0.6, 0.009, 2.0, 9.0, 0.98711, 2.72, 0.22, 8.0]
HI = [14.2, 1.1, 1.66, 65.8, 0.346, 289.0, 440.0, 1.03898, 3.82, 1.08, 14.2]
CLASS_COUNTS = {3: 20, 4: 163, 5: 1457, 6: 2198, 7: 880, 8: 175, 9: 5}

def corr():
    c = np.eye(11)
    pairs = {(0, 8): -0.43, (0, 2): 0.29, (0, 7): 0.27, (3, 7): 0.84, (3, 6): 0.40,
             (3, 10): -0.45, (3, 5): 0.30, (4, 10): -0.36, (4, 7): 0.26, (5, 6): 0.62,
             (6, 7): 0.53, (6, 10): -0.45, (7, 10): -0.78, (1, 2): -0.15}
    for (i, j), v in pairs.items():
        c[i, j] = c[j, i] = v
    w, v = np.linalg.eigh(c)
    c = v @ np.diag(np.clip(w, 1e-3, None)) @ v.T
    d = np.sqrt(np.diag(c))
    return c / np.outer(d, d)

def main():
    rng = np.random.default_rng(4898)
    n = sum(CLASS_COUNTS.values())
    z = rng.multivariate_normal(np.zeros(11), corr(), size=n)
    x = np.empty_like(z)
    for j in range(11):
        if j in SKEWED:
            s2 = np.log1p((SD[j] / MEAN[j]) ** 2)
            x[:, j] = MEAN[j] * np.exp(np.sqrt(s2) * z[:, j] - s2 / 2)
        else:
            x[:, j] = MEAN[j] + SD[j] * z[:, j]
        x[:, j] = np.clip(np.round(x[:, j], DECIMALS[j]), LO[j], HI[j])
    score = 0.55 * z[:, 10] - 0.25 * z[:, 1] - 0.15 * z[:, 4] + 0.8 * rng.standard_normal(n)
    order = np.argsort(score, kind="stable")
    quality = np.empty(n, dtype=int)
    pos = 0
    for q, cnt in sorted(CLASS_COUNTS.items()):
        quality[order[pos:pos + cnt]] = q
        pos += cnt
    with open("winequality-white-synthetic.csv", "w") as f:
        f.write(",".join(COLS + ["quality"]) + "\n")
        for i in range(n):
            cells = [f"{x[i, j]:.{DECIMALS[j]}f}".rstrip("0").rstrip(".") if DECIMALS[j] else f"{int(x[i, j])}"
                     for j in range(11)]
            f.write(",".join(cells + [str(quality[i])]) + "\n")

if __name__ == "__main__":
    main()
