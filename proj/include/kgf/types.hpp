#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace kgf {

// Dense dictionary-encoded identifiers. Ids are assigned in first-seen order
// and are contiguous 0..N-1 within a sealed store.
using EntityId = std::uint64_t;
using PredicateId = std::uint64_t;
using LiteralId = std::uint64_t;
using TypeId = std::uint32_t;

constexpr TypeId kNoType = 0xffffffffu;

// Tail of a triple: exactly one of entity reference or literal.
// Packed into a single u64 for storage: bit 63 set marks a literal id.
struct ObjectRef {
    enum class Kind : std::uint8_t { Entity = 0, Literal = 1 };

    Kind kind = Kind::Entity;
    std::uint64_t id = 0;

    static constexpr std::uint64_t kLiteralBit = 1ull << 63;

    bool is_entity() const { return kind == Kind::Entity; }
    bool is_literal() const { return kind == Kind::Literal; }

    std::uint64_t packed() const {
        return is_literal() ? (id | kLiteralBit) : id;
    }
    static ObjectRef unpack(std::uint64_t word) {
        ObjectRef r;
        if (word & kLiteralBit) {
            r.kind = Kind::Literal;
            r.id = word & ~kLiteralBit;
        } else {
            r.kind = Kind::Entity;
            r.id = word;
        }
        return r;
    }
    static ObjectRef entity(EntityId e) { return {Kind::Entity, e}; }
    static ObjectRef literal(LiteralId l) { return {Kind::Literal, l}; }

    friend bool operator==(const ObjectRef&, const ObjectRef&) = default;
    friend auto operator<=>(const ObjectRef& a, const ObjectRef& b) {
        return a.packed() <=> b.packed();
    }
};

struct Triple {
    EntityId head = 0;
    PredicateId predicate = 0;
    ObjectRef tail;

    friend bool operator==(const Triple&, const Triple&) = default;
    friend auto operator<=>(const Triple& a, const Triple& b) {
        if (auto c = a.head <=> b.head; c != 0) return c;
        if (auto c = a.predicate <=> b.predicate; c != 0) return c;
        return a.tail <=> b.tail;
    }
};

// Error taxonomy. I/O failures, on-disk format violations (with the byte
// offset of the first bad read), bad arguments / precondition violations,
// and lookups of unknown keys are kept distinct so callers can map them to
// exit codes and HTTP statuses.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FormatError : std::runtime_error {
    FormatError(const std::string& msg, std::uint64_t byte_offset)
        : std::runtime_error(msg + " (byte offset " +
                             std::to_string(byte_offset) + ")"),
          offset(byte_offset) {}
    std::uint64_t offset;
};

struct InvalidArgument : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NotFoundError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidState : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace kgf
