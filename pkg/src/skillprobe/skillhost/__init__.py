from .host import (
    NOT_UNDERSTOOD,
    EmbeddedLink,
    EmbeddedSession,
    ProtocolError,
    SkillHost,
    resolve_candidates,
)
from .model import (
    DefinitionError,
    DefinitionIssue,
    HostResponse,
    MatcherKind,
    ResolverMode,
    ResolverPolicy,
    ResponseKind,
    SkillDefinition,
    StateSpec,
    Transition,
    load_skill_definitions,
    parse_definitions,
    write_definitions,
)
from .protocol import (
    HostClient,
    HostServer,
    HostUnavailable,
    RemoteError,
    RemoteLink,
    RemoteSession,
    parse_address,
    serve,
)

__all__ = [
    "NOT_UNDERSTOOD", "EmbeddedLink", "EmbeddedSession", "ProtocolError", "SkillHost",
    "resolve_candidates", "DefinitionError", "DefinitionIssue", "HostResponse", "MatcherKind",
    "ResolverMode", "ResolverPolicy", "ResponseKind", "SkillDefinition", "StateSpec",
    "Transition", "load_skill_definitions", "parse_definitions", "write_definitions",
    "HostClient", "HostServer", "HostUnavailable", "RemoteError", "RemoteLink",
    "RemoteSession", "parse_address", "serve",
]
