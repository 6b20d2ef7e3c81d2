#pragma once

#include <stdexcept>
#include <string>

namespace sparsegate {

// Dataset ingestion failures. The code distinguishes failure classes so
// callers (and the CLI exit-code mapping) can react without string matching.
enum class DataErrorCode {
    io,              // file missing / unreadable
    bad_magic,       // IDX magic number mismatch
    truncated,       // payload shorter than the header promises
    count_mismatch,  // image/label counts disagree
    schema,          // CSV schema does not cover the file
    empty_split,     // split produced an empty partition
    bad_value,       // unparseable cell that cannot be dropped
};

class DataError : public std::runtime_error {
public:
    DataError(DataErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    DataErrorCode code() const { return code_; }

private:
    DataErrorCode code_;
};

// Invalid or inconsistent experiment configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Training hit a non-finite loss. Records where, then unwinds; nothing is
// clamped or silently retried (CLI exit code 4).
class NumericAbort : public std::runtime_error {
public:
    NumericAbort(int epoch, long batch, const std::string& what)
        : std::runtime_error(what), epoch_(epoch), batch_(batch) {}
    int epoch() const { return epoch_; }
    long batch() const { return batch_; }

private:
    int epoch_;
    long batch_;
};

}  // namespace sparsegate
