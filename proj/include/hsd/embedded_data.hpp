#pragma once

// Text data files compiled into the library (see data/ and
// cmake/embed_text.cmake).
namespace hsd::embedded {
extern const char kStopwordsText[];
extern const char kCommonWordsText[];
}  // namespace hsd::embedded
