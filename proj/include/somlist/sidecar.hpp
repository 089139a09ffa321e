#pragma once

// `.tags.json` sidecar written next to every tagged image.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "somlist/annotations.hpp"
#include "somlist/markalloc.hpp"

namespace som {

struct SidecarPlacement {
    TagPlacement placement;
    std::string category;
    friend bool operator==(const SidecarPlacement&, const SidecarPlacement&) = default;
};

struct TagSidecar {
    std::int64_t image_id = 0;
    std::string source_file;  // file_name from the annotation file
    std::string tagged_file;  // tagged PNG, relative to the sidecar's directory
    int width = 0;
    int height = 0;
    int level = 0;
    std::vector<SidecarPlacement> placements;
    std::vector<Collision> collisions;
    friend bool operator==(const TagSidecar&, const TagSidecar&) = default;
};

TagSidecar make_sidecar(const AnnotationSet& set, const TaggedImage& tagged, const std::string& tagged_file,
                        int level);

std::string sidecar_to_json(const TagSidecar& sidecar);
TagSidecar sidecar_from_json(std::string_view json_text);

void write_sidecar(const std::filesystem::path& path, const TagSidecar& sidecar);
TagSidecar read_sidecar(const std::filesystem::path& path);

/// All `*.tags.json` files under `dir`, sorted by image_id.
std::vector<std::filesystem::path> list_sidecars(const std::filesystem::path& dir);

}  // namespace som
