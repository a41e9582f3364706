"""
Functional helpers shared across the package
"""

import inspect
from functools import wraps
from typing import Any, Callable, Iterable, Literal, Optional

import toolz as tz
import toolz.curried as curried
from pathos.multiprocessing import ProcessingPool, ThreadingPool
from toolz import curry as _curry


def curry[T](func: Callable[..., T], fallback: bool = False) -> Any:
    """
    Allow ``func`` to be partially parameterised.

    Evaluation only happens once every mandatory argument is supplied, so
    decorators underneath ``@curry`` (e.g. ``pydantic.validate_call``) only
    run on complete calls. ``@curry`` must therefore be the outermost decorator.

    Parameters
    ----------
    func : Callable
        The function to curry
    fallback : bool
        If ``True``, use ``toolz.curry`` when ``inspect`` cannot read the
        signature of ``func`` (e.g. CPython built-ins).

    Returns
    -------
    Callable | Any
        Curried function, or the result of ``func`` if all mandatory
        arguments were provided.

    Examples
    --------
    >>> @curry
    ... def scale_depth(depth, factor):
    ...     return depth * factor
    >>> to_cm = scale_depth(factor=100.0)
    >>> to_cm(1.5)
    150.0
    """

    @wraps(func)
    def toolz_curry(*args, **kwargs) -> Callable:
        return _curry(func)(*args, **kwargs)  # type: ignore

    try:
        params = inspect.signature(func).parameters
    except ValueError:
        if fallback:
            return toolz_curry
        raise ValueError(
            f"Cannot extract parameters from function {func}. Use fallback=True to use toolz.curry instead."
        )

    required_args = tz.pipe(
        params,
        curried.valfilter(
            lambda param: param.default is inspect.Parameter.empty
            and param.kind
            in {
                inspect.Parameter.POSITIONAL_OR_KEYWORD,
                inspect.Parameter.KEYWORD_ONLY,
                inspect.Parameter.POSITIONAL_ONLY,
            }
        ),
        list,
    )

    @wraps(func)
    def curried_func(*args, **kwargs):
        if not (remaining := [k for k in required_args if k not in kwargs]) or len(
            args
        ) >= len(remaining):
            return func(*args, **kwargs)

        @wraps(func)
        def partial_func(*args2, **kwargs2):
            # kwargs kept apart so duplicated keywords still raise
            return curried_func(*args, *args2, **kwargs, **kwargs2)

        return partial_func

    return curried_func


@curry
def scan_pipe[T](funcs: Iterable[Callable[[T], T]], init: T) -> list[T]:
    """
    Apply ``funcs`` in turn and keep every intermediate value

    Computes ``[f1(init), f2(f1(init)), ...]``, i.e. the state after each
    function; ``init`` itself is not included.

    Parameters
    ----------
    funcs : Iterable[Callable[[T], T]]
        Functions applied left to right
    init : T
        Initial state

    Returns
    -------
    list[T]
        State after each function

    Examples
    --------
    >>> scan_pipe([lambda x: x + 1, lambda x: x * 10], 1)
    [2, 20]
    """
    return tz.pipe(
        funcs,
        curried.cons(init),
        curried.accumulate(lambda state, f: f(state)),
        curried.drop(1),
        list,
    )


@curry
def pmap(
    func: Callable[..., Any],
    iterable: Any,
    *iterables: Any,
    n_workers: Optional[int] = None,
    executor: Literal["process", "thread"] = "thread",
) -> list[Any]:
    """
    Parallel map preserving input order

    Parameters
    ----------
    func : Callable
        Function to apply to each element of the iterable(s)
    n_workers : Optional[int]
        Number of workers, defaults to the number of CPUs
    executor : Literal["process", "thread"]
        Pool type

    Returns
    -------
    list[Any]
        Results in the order of ``iterable``

    Examples
    --------
    >>> list(pmap(lambda x: x ** 2, range(4), n_workers=2))
    [0, 1, 4, 9]
    """
    Pool = ProcessingPool if executor == "process" else ThreadingPool
    with Pool(n_workers) as pool:
        results = list(pool.imap(func, iterable, *iterables))
    return results
