#pragma once

#include <stdexcept>
#include <string>

namespace mrverb {

/// Base for every domain error raised by the library. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define MRVERB_DEFINE_ERROR(Name)            \
    class Name : public Error {              \
    public:                                  \
        using Error::Error;                  \
    };

// corpus
MRVERB_DEFINE_ERROR(MalformedLine)
MRVERB_DEFINE_ERROR(UnknownTag)
MRVERB_DEFINE_ERROR(EmptyCorpus)

// annotation pipeline
MRVERB_DEFINE_ERROR(TaggerFailure)
MRVERB_DEFINE_ERROR(EmptySentence)
MRVERB_DEFINE_ERROR(BatchTooLarge)
MRVERB_DEFINE_ERROR(IndexMismatch)
MRVERB_DEFINE_ERROR(AnnotatorUnavailable)

// diagnostics
MRVERB_DEFINE_ERROR(NotAVerb)

// tagger
MRVERB_DEFINE_ERROR(SpanOutOfRange)
MRVERB_DEFINE_ERROR(InvalidEpsilon)
MRVERB_DEFINE_ERROR(DisjointnessViolation)
MRVERB_DEFINE_ERROR(EmptyTrain)
MRVERB_DEFINE_ERROR(InvalidConfig)
MRVERB_DEFINE_ERROR(CheckpointError)

// evaluation
MRVERB_DEFINE_ERROR(CompositionMismatch)
MRVERB_DEFINE_ERROR(MalformedItem)
MRVERB_DEFINE_ERROR(EmptyInput)

// analysis
MRVERB_DEFINE_ERROR(UnknownSpeakerLine)
MRVERB_DEFINE_ERROR(EmptyTranscript)

#undef MRVERB_DEFINE_ERROR

/// LLM replies that cannot be turned into judgments. The raw reply is kept for auditing.
class ResponseError : public Error {
public:
    ResponseError(const std::string& what, std::string raw) : Error(what), raw_(std::move(raw)) {}
    const std::string& raw() const noexcept { return raw_; }

private:
    std::string raw_;
};

class UnparseableResponse : public ResponseError {
public:
    using ResponseError::ResponseError;
};

class SchemaViolation : public ResponseError {
public:
    using ResponseError::ResponseError;
};

}  // namespace mrverb
