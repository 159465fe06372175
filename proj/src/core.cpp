#include "sima/core.hpp"

namespace sima {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::NoSuchInstance: return "NoSuchInstance";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::BadSchedule: return "BadSchedule";
        case ErrorCode::BadRect: return "BadRect";
        case ErrorCode::BadThresholds: return "BadThresholds";
        case ErrorCode::ScaleCountMismatch: return "ScaleCountMismatch";
        case ErrorCode::PredictionUnavailable: return "PredictionUnavailable";
        case ErrorCode::EmptyOperands: return "EmptyOperands";
        case ErrorCode::EmptyInstance: return "EmptyInstance";
        case ErrorCode::EmptyLabelMap: return "EmptyLabelMap";
        case ErrorCode::SynthInfeasible: return "SynthInfeasible";
        case ErrorCode::ManifestMismatch: return "ManifestMismatch";
        case ErrorCode::BadConfig: return "BadConfig";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

}  // namespace sima
