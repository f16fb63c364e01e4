"""Hypothesis strategies shared by the test modules."""

from hypothesis import strategies as st

from limitlab import kernel as K

small = st.integers(min_value=0, max_value=40)
finite_sets = st.frozensets(small, max_size=6).map(lambda s: tuple(sorted(s)))


def _stride(args):
    a, r, t = args
    return K.Stride(a, r % a, t)


leaves = st.one_of(
    finite_sets.map(K.Fin),
    small.map(K.Tail),
    st.tuples(st.integers(1, 5), st.integers(0, 4), small).map(_stride),
)


def _extend(children):
    return st.one_of(
        st.tuples(children, children).map(lambda p: K.Union(*p)),
        st.tuples(children, finite_sets).map(lambda p: K.Diff(*p)),
        st.tuples(children, small).map(lambda p: K.Above(*p)),
        st.tuples(children, st.integers(0, 5)).map(lambda p: K.Pad(*p)),
    )


codes = st.recursive(leaves, _extend, max_leaves=8)
pure_codes = st.recursive(leaves, lambda ch: st.one_of(
    st.tuples(ch, ch).map(lambda p: K.Union(*p)),
    st.tuples(ch, finite_sets).map(lambda p: K.Diff(*p)),
    st.tuples(ch, small).map(lambda p: K.Above(*p))), max_leaves=8)
