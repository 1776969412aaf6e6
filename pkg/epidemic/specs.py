"""
Validated model configuration.

``ModelFragment`` is what one model or defaults file assigns (unset fields are
tracked by pydantic's ``model_fields_set``); ``ModelSpec`` is the complete,
merged configuration consumed by the rest of the pipeline.
"""

from enum import Enum
from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt, PositiveInt, field_validator

Probability = Annotated[float, Field(ge=0.0, le=1.0)]
Seed = Annotated[int, Field(ge=0, le=2**64 - 1)]
# Prolog atom: the disease name becomes a predicate prefix.
DiseaseName = Annotated[str, Field(pattern=r'^[a-z][A-Za-z0-9_]*$')]


class Compartment(str, Enum):
    SUSCEPTIBLE = 'susceptible'
    INFECTED = 'infected'
    RECOVERED = 'recovered'
    RESISTANT = 'resistant'


COMPARTMENTS = tuple(Compartment)


class Regime(str, Enum):
    STATIC = 'static'
    PER_TIMESTEP = 'perstep'


class FileSource(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid')

    kind: Literal['file'] = 'file'
    path: str = Field(min_length=1)


class RandomPopulation(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid')

    kind: Literal['random'] = 'random'
    n: PositiveInt


class RandomContacts(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid')

    kind: Literal['random'] = 'random'
    edge_prob: Probability
    regime: Regime = Regime.STATIC


PopulationSource = Annotated[Union[FileSource, RandomPopulation], Field(discriminator='kind')]
ContactsSource = Annotated[Union[FileSource, RandomContacts], Field(discriminator='kind')]
InitialInfected = Union[NonNegativeInt, tuple[str, ...]]


def _canonical_queries(value):
    seen = set(value)
    return tuple(c for c in COMPARTMENTS if c in seen)


class ModelSpec(BaseModel):
    """
    Complete disease model plus simulation metaparameters.

    ``infectious_period=None`` means unbounded, ``immunity_period=None`` means
    permanent resistance.
    """

    model_config = ConfigDict(frozen=True, extra='forbid')

    disease_name: DiseaseName = 'disease'
    transmission_prob: Probability = 0.0
    external_prob: Probability = 0.0
    infectious_period: PositiveInt | None = None
    persistence_prob: Probability = 1.0
    immunity_prob: Probability = 0.0
    immunity_period: PositiveInt | None = None
    horizon: PositiveInt = 12
    runs: PositiveInt = 1
    seed: Seed = 0
    initial_infected: InitialInfected = 1
    population_source: PopulationSource | None = None
    contacts_source: ContactsSource | None = None
    contacts_undirected: bool = False
    queries: tuple[Compartment, ...] = COMPARTMENTS

    @field_validator('queries')
    @classmethod
    def queries_not_empty(cls, value):
        if not value:
            raise ValueError('at least one compartment must be queried')
        return _canonical_queries(value)

    def with_overrides(self, **changes):
        """Copy with ``changes`` applied and re-validated."""
        return ModelSpec(**{**self.model_dump(), **changes})


class ModelFragment(BaseModel):
    """Partial assignment of ModelSpec fields made by a single file."""

    model_config = ConfigDict(frozen=True, extra='forbid')

    disease_name: DiseaseName | None = None
    transmission_prob: Probability | None = None
    external_prob: Probability | None = None
    infectious_period: PositiveInt | None = None
    persistence_prob: Probability | None = None
    immunity_prob: Probability | None = None
    immunity_period: PositiveInt | None = None
    horizon: PositiveInt | None = None
    runs: PositiveInt | None = None
    seed: Seed | None = None
    initial_infected: InitialInfected | None = None
    population_source: PopulationSource | None = None
    contacts_source: ContactsSource | None = None
    contacts_undirected: bool | None = None
    queries: tuple[Compartment, ...] | None = None

    def assigned(self):
        """Only the fields the source text actually set, ``None`` meaning unbounded/permanent."""
        return {name: getattr(self, name) for name in self.model_fields_set}

    def is_empty(self):
        return not self.model_fields_set
