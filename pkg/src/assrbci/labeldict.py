import re
from collections.abc import MutableMapping
from typing import Iterator, Tuple

import orjson

from assrbci.mypy_types import LabelsType

# Iteration hands back the encoded keys, so those are accepted as keys too.
regex = re.compile(r"\{.*:.*,?\}")


class LabelDict(MutableMapping):
    """
    LabelDict stores values against a set of labels, for example the
    ``{"task": "tvnt", "kind": "sam", "length": 3.0}`` cell of an evaluation
    table. Label order is irrelevant: the key is the sorted JSON encoding of
    the labels.
    """

    EMPTY_KEY = "__EMPTY__"

    def __init__(self, *args, **kwargs):
        self.store = {}
        self.update(dict(*args, **kwargs))

    def __getitem__(self, key):
        return self.store[self.__keytransform__(key)]

    def __setitem__(self, key, value):
        self.store[self.__keytransform__(key)] = value

    def __delitem__(self, key):
        del self.store[self.__keytransform__(key)]

    def __iter__(self):
        return iter(self.store)

    def __len__(self):
        return len(self.store)

    def __keytransform__(self, key):
        if not key or key == LabelDict.EMPTY_KEY:
            return LabelDict.EMPTY_KEY

        if isinstance(key, bytes) and regex.match(key.decode()):
            return key

        if not isinstance(key, dict):
            raise TypeError("Only accepts dicts as keys")

        return orjson.dumps(  # pylint: disable=no-member
            key,
            option=(
                orjson.OPT_NON_STR_KEYS  # pylint: disable=no-member
                | orjson.OPT_SORT_KEYS  # pylint: disable=no-member
            ),
        )

    def labelled_items(self) -> Iterator[Tuple[LabelsType, object]]:
        """Yield ``(labels, value)`` pairs with the labels decoded back into
        a dict."""
        for k, v in self.store.items():
            labels = (
                {}
                if k == LabelDict.EMPTY_KEY
                else orjson.loads(k)  # pylint: disable=no-member
            )
            yield labels, v

    def select(self, **match) -> Iterator[Tuple[LabelsType, object]]:
        """Yield the items whose labels contain every ``match`` pair."""
        for labels, value in self.labelled_items():
            if all(labels.get(k) == v for k, v in match.items()):
                yield labels, value
