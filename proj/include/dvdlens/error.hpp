// Copyright (c) 2026, dvdlens contributors
// SPDX-License-Identifier: Apache-2.0
//
// Typed error used across the library. Every failure carries an ErrorCode so
// callers (and the CLI exit-code mapping) can branch without parsing text.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dvdlens {

enum class ErrorCode {
    // container / io
    BadMagic,
    UnsupportedVersion,
    UnsupportedDtype,
    DimMismatch,
    Truncated,
    MalformedManifest,
    MalformedCsv,
    IoFailure,
    InvalidTrace,
    // metrics
    NotADistribution,
    IndexOutOfRange,
    EmptyLayerSet,
    TooShort,
    ZeroNormVector,
    DimensionMismatch,
    // scoring / ablation / detection
    InvalidTally,
    EmptyInput,
    HeadOutOfRange,
    StepOutOfRange,
    MissingMetric,
    NotSingleHead,
    NotHeadPair,
    EmptyGroup,
    EmptyCorpus,
    EmptyGrid,
    InvalidParams,
    InvalidArgument,
    SerializationFailure,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::BadMagic: return "BadMagic";
        case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
        case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
        case ErrorCode::DimMismatch: return "DimMismatch";
        case ErrorCode::Truncated: return "Truncated";
        case ErrorCode::MalformedManifest: return "MalformedManifest";
        case ErrorCode::MalformedCsv: return "MalformedCsv";
        case ErrorCode::IoFailure: return "IoFailure";
        case ErrorCode::InvalidTrace: return "InvalidTrace";
        case ErrorCode::NotADistribution: return "NotADistribution";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::EmptyLayerSet: return "EmptyLayerSet";
        case ErrorCode::TooShort: return "TooShort";
        case ErrorCode::ZeroNormVector: return "ZeroNormVector";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::InvalidTally: return "InvalidTally";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::HeadOutOfRange: return "HeadOutOfRange";
        case ErrorCode::StepOutOfRange: return "StepOutOfRange";
        case ErrorCode::MissingMetric: return "MissingMetric";
        case ErrorCode::NotSingleHead: return "NotSingleHead";
        case ErrorCode::NotHeadPair: return "NotHeadPair";
        case ErrorCode::EmptyGroup: return "EmptyGroup";
        case ErrorCode::EmptyCorpus: return "EmptyCorpus";
        case ErrorCode::EmptyGrid: return "EmptyGrid";
        case ErrorCode::InvalidParams: return "InvalidParams";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::SerializationFailure: return "SerializationFailure";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace dvdlens
