#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace certmark {

enum class ErrorKind {
  kIngestion,      // a required corpus file is missing or unreadable
  kCorruptCorpus,  // corpus files are inconsistent with each other
  kConfig,         // invalid configuration or parameter combination
  kShape,          // tensor shape mismatch
  kContract,       // API precondition violated by the caller
  kCheckpoint,     // checkpoint manifest or payload is malformed
  kVerification,   // ownership verification could not be carried out
  kIo,             // filesystem failure outside corpus ingestion
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + message), kind_(kind), message_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  // The message without the kind prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIngestion: return "ingestion";
    case ErrorKind::kCorruptCorpus: return "corrupt-corpus";
    case ErrorKind::kConfig: return "configuration";
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kContract: return "contract";
    case ErrorKind::kCheckpoint: return "checkpoint";
    case ErrorKind::kVerification: return "verification";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace certmark
