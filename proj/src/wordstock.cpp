#include "wordstock.hpp"

namespace zerolog::data::wordstock {

namespace {

constexpr Synonyms kBenign[] = {
    {"receive", "accept", "obtain", "get"},
    {"send", "transmit", "dispatch", "emit"},
    {"block", "chunk", "segment", "piece"},
    {"start", "begin", "launch", "initiate"},
    {"finish", "complete", "done", "conclude"},
    {"connect", "attach", "link", "bind"},
    {"open", "load", "mount", "access"},
    {"write", "store", "persist", "save"},
    {"read", "fetch", "retrieve", "scan"},
    {"delete", "remove", "purge", "erase"},
    {"request", "query", "call", "invoke"},
    {"response", "reply", "answer", "result"},
    {"node", "host", "server", "machine"},
    {"client", "caller", "consumer", "requester"},
    {"file", "document", "record", "entry"},
    {"cache", "buffer", "pool", "reserve"},
    {"user", "account", "principal", "member"},
    {"lease", "ticket", "token", "grant"},
    {"instance", "vm", "guest", "container"},
    {"image", "snapshot", "template", "volume"},
    {"network", "subnet", "bridge", "route"},
    {"port", "socket", "endpoint", "channel"},
    {"memory", "ram", "heap", "allocation"},
    {"disk", "drive", "storage", "partition"},
    {"job", "task", "work", "batch"},
    {"queue", "backlog", "pipeline", "stream"},
    {"schedule", "plan", "assign", "allocate"},
    {"update", "modify", "change", "refresh"},
    {"verify", "check", "validate", "confirm"},
    {"sync", "replicate", "mirror", "copy"},
    {"config", "setting", "option", "parameter"},
    {"heartbeat", "ping", "probe", "keepalive"},
    {"status", "state", "health", "condition"},
    {"register", "enroll", "announce", "publish"},
    {"transfer", "move", "migrate", "relocate"},
    {"size", "length", "bytes", "amount"},
    {"time", "duration", "elapsed", "latency"},
    {"version", "revision", "release", "build"},
    {"lock", "mutex", "latch", "guard"},
    {"index", "catalog", "directory", "registry"},
    {"packet", "frame", "datagram", "message"},
    {"commit", "flush", "finalize", "apply"},
    {"service", "daemon", "agent", "worker"},
    {"successfully", "ok", "fine", "properly"},
    {"new", "fresh", "initial", "created"},
    {"old", "previous", "stale", "prior"},
    {"total", "count", "number", "sum"},
    {"session", "context", "conversation", "handle"},
};

constexpr Synonyms kFailure[] = {
    {"error", "fault", "failure", "malfunction"},
    {"exception", "crash", "panic", "abort"},
    {"timeout", "expired", "unresponsive", "hung"},
    {"corrupt", "damaged", "invalid", "broken"},
    {"refused", "denied", "rejected", "forbidden"},
    {"lost", "missing", "dropped", "vanished"},
    {"fatal", "critical", "severe", "emergency"},
    {"interrupted", "terminated", "killed", "halted"},
};

constexpr std::string_view kComponents[] = {
    "namenode", "datanode", "rack",     "kernel",   "torus",    "midplane", "nova",
    "neutron",  "keystone", "glance",   "cinder",   "swift",    "yarn",     "hbase",
    "zookeeper", "kafka",   "spark",    "hive",     "etcd",     "kubelet",  "proxy",
    "gateway",  "balancer", "ingress",  "mapper",   "reducer",  "shard",    "replica",
    "broker",   "collector", "indexer", "crawler",
};

constexpr std::string_view kHosts[] = {
    "alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel",
};

constexpr std::string_view kPlaceholders[] = {"num", "ip", "hex", "path", "uuid"};

}  // namespace

std::span<const Synonyms> benign() { return kBenign; }
std::span<const Synonyms> failure() { return kFailure; }
std::span<const std::string_view> components() { return kComponents; }
std::span<const std::string_view> hosts() { return kHosts; }
std::span<const std::string_view> placeholders() { return kPlaceholders; }

}  // namespace zerolog::data::wordstock
