"""Slow set-based reference implementations used to cross-check the fast code."""
from itertools import combinations

TOP = "TOP"


def subsets(items):
    items = sorted(items)
    for k in range(len(items) + 1):
        for c in combinations(items, k):
            yield frozenset(c)


def responsive(acceptable, q):
    def choose(Y):
        return frozenset([x for x in acceptable if x in Y][:q])

    return choose


def compose(c1, c2, excl):
    def choose(Y):
        z = c1(Y)
        e = excl(z)
        rest = frozenset() if e == TOP else Y - e
        return z | c2(rest)

    return choose


def is_pi(choose, ground):
    sets = list(subsets(ground))
    for Y in sets:
        for Yp in sets:
            if choose(Y | Yp) != choose(choose(Y) | choose(Yp)):
                return False
    return True


def is_sub(choose, ground):
    sets = list(subsets(ground))
    for Y in sets:
        for Yp in sets:
            if Y <= Yp and (choose(Yp) & Y) - choose(Y):
                return False
    return True


def is_con(choose, ground):
    sets = list(subsets(ground))
    for Y in sets:
        for Yp in sets:
            if choose(Yp) <= Y <= Yp and choose(Y) != choose(Yp):
                return False
    return True


def is_sm(choose, ground):
    sets = list(subsets(ground))
    return all(len(choose(Y)) <= len(choose(Yp)) for Y in sets for Yp in sets if Y <= Yp)


def tlcr(t, K, T):
    """Threshold-linear exclusion from its parameters; ``T[k]`` is the reuse set at size k."""

    def excl(Z):
        k = len(Z)
        if k >= t:
            return TOP
        reuse = T[min(k, len(T) - 1)] if T else frozenset()
        return (Z - reuse) | K

    return excl
