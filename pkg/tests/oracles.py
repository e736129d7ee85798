"""Independent reference implementations: plain loops straight from the definitions.

Nothing here imports the kernels or the vectorized package code paths.
"""
import math


def unicast_cost(xhat, x):
    """min over j of the squared error left at the other receivers."""
    n = len(x)
    return min(sum((x[i] - xhat[i]) ** 2 for i in range(n) if i != j) for j in range(n))


def unicast_objective(xhat, rows):
    return math.fsum(unicast_cost(xhat, x) for x in rows) / len(rows)


def theta_index(i, j, n):
    """Offset of w_ij in theta (0-based i receiver, j side information)."""
    # blocks by side sensor j, receivers ascending inside a block
    k = 0
    for jj in range(n):
        for ii in range(n):
            if ii == jj:
                continue
            if (ii, jj) == (i, j):
                return k
            k += 2
    raise ValueError


def broadcast_cost(theta, x):
    n = len(x)
    best = math.inf
    for j in range(n):
        c = 0.0
        for i in range(n):
            if i != j:
                k = theta_index(i, j, n)
                c += (x[i] - theta[k] * x[j] - theta[k + 1]) ** 2
        best = min(best, c)
    return best


def broadcast_objective(theta, rows):
    return math.fsum(broadcast_cost(theta, x) for x in rows) / len(rows)


def unicast_G(xhat, rows):
    return math.fsum(max((x[j] - xhat[j]) ** 2 for j in range(len(x))) for x in rows) / len(rows)


def broadcast_G(theta, rows):
    """Mean of max_j sum_{l != j} C_l with C_l the error left when l transmits."""
    total = []
    for x in rows:
        n = len(x)
        C = []
        for l in range(n):
            c = 0.0
            for i in range(n):
                if i != l:
                    k = theta_index(i, l, n)
                    c += (x[i] - theta[k] * x[l] - theta[k + 1]) ** 2
            C.append(c)
        total.append(max(sum(C) - C[j] for j in range(n)))
    return math.fsum(total) / len(rows)


def subgradient_two(theta, x):
    """n = 2 indicator form: theta = (w21, b21, w12, b12).

    G = max{r12^2, r21^2}; ties resolved like a '>=' linear search over
    j = 1, 2, i.e. the later term wins.
    """
    w21, b21, w12, b12 = theta
    x1, x2 = x
    r21 = x2 - w21 * x1 - b21  # error at 2 when 1 transmits
    r12 = x1 - w12 * x2 - b12  # error at 1 when 2 transmits
    # G_1 = C_2 = r12^2 and G_2 = C_1 = r21^2
    if r21 * r21 >= r12 * r12:
        return [-2 * x1 * r21, -2 * r21, 0.0, 0.0]
    return [0.0, 0.0, -2 * x2 * r12, -2 * r12]
