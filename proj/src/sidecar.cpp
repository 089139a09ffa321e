#include "somlist/sidecar.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "somlist/errors.hpp"

namespace som {

using ojson = nlohmann::ordered_json;

TagSidecar make_sidecar(const AnnotationSet& set, const TaggedImage& tagged, const std::string& tagged_file,
                        int level) {
    const ImageRecord* image = set.find_image(tagged.image_id);
    if (image == nullptr) {
        throw ReferentialError("image " + std::to_string(tagged.image_id) + " does not resolve", tagged.image_id);
    }
    TagSidecar sc;
    sc.image_id = tagged.image_id;
    sc.source_file = image->file_name;
    sc.tagged_file = tagged_file;
    sc.width = image->width;
    sc.height = image->height;
    sc.level = level;
    for (const auto& p : tagged.placements) {
        const SegmentationAnnotation* ann = set.find_annotation(p.annotation_id);
        if (ann == nullptr) {
            throw ReferentialError("tag " + std::to_string(p.tag_id) + ": annotation " +
                                       std::to_string(p.annotation_id) + " does not resolve",
                                   p.annotation_id);
        }
        sc.placements.push_back({p, set.find_category(ann->category_id)->name});
    }
    sc.collisions = tagged.collisions;
    return sc;
}

std::string sidecar_to_json(const TagSidecar& sc) {
    ojson j;
    j["image_id"] = sc.image_id;
    j["file_name"] = sc.source_file;
    j["tagged_file"] = sc.tagged_file;
    j["width"] = sc.width;
    j["height"] = sc.height;
    j["level"] = sc.level;
    j["placements"] = ojson::array();
    for (const auto& sp : sc.placements) {
        const auto& p = sp.placement;
        ojson pj;
        pj["tag_id"] = p.tag_id;
        pj["anchor"] = {p.anchor.x, p.anchor.y};
        pj["label_box"] = {p.label_box.x, p.label_box.y, p.label_box.w, p.label_box.h};
        pj["annotation_id"] = p.annotation_id;
        pj["category"] = sp.category;
        j["placements"].push_back(std::move(pj));
    }
    j["collisions"] = ojson::array();
    for (const auto& c : sc.collisions) {
        j["collisions"].push_back({{"tag_id", c.tag_id}, {"overlaps_with", c.overlaps_with}});
    }
    return j.dump(2) + "\n";
}

TagSidecar sidecar_from_json(std::string_view text) {
    ojson j;
    try {
        j = ojson::parse(text.begin(), text.end());
    } catch (const ojson::parse_error& e) {
        throw ParseError(std::string("malformed sidecar: ") + e.what(), e.byte);
    }
    try {
        TagSidecar sc;
        sc.image_id = j.at("image_id").get<std::int64_t>();
        sc.source_file = j.at("file_name").get<std::string>();
        sc.tagged_file = j.at("tagged_file").get<std::string>();
        sc.width = j.at("width").get<int>();
        sc.height = j.at("height").get<int>();
        sc.level = j.at("level").get<int>();
        for (const auto& pj : j.at("placements")) {
            SidecarPlacement sp;
            sp.placement.tag_id = pj.at("tag_id").get<int>();
            const auto& a = pj.at("anchor");
            sp.placement.anchor = {a.at(0).get<int>(), a.at(1).get<int>()};
            const auto& b = pj.at("label_box");
            sp.placement.label_box = {b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>()};
            sp.placement.annotation_id = pj.at("annotation_id").get<std::int64_t>();
            sp.category = pj.at("category").get<std::string>();
            sc.placements.push_back(std::move(sp));
        }
        if (j.contains("collisions")) {
            for (const auto& cj : j.at("collisions")) {
                sc.collisions.push_back({cj.at("tag_id").get<int>(), cj.at("overlaps_with").get<std::vector<int>>()});
            }
        }
        return sc;
    } catch (const ojson::exception& e) {
        throw DataError(std::string("invalid sidecar: ") + e.what());
    }
}

void write_sidecar(const std::filesystem::path& path, const TagSidecar& sidecar) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << sidecar_to_json(sidecar);
}

TagSidecar read_sidecar(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open sidecar " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return sidecar_from_json(ss.str());
}

std::vector<std::filesystem::path> list_sidecars(const std::filesystem::path& dir) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) {
        throw IoError("not a directory: " + dir.string());
    }
    std::vector<std::pair<std::int64_t, std::filesystem::path>> found;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (entry.is_regular_file() && name.size() > 10 && name.ends_with(".tags.json")) {
            found.emplace_back(read_sidecar(entry.path()).image_id, entry.path());
        }
    }
    std::sort(found.begin(), found.end());
    std::vector<std::filesystem::path> out;
    for (auto& [id, p] : found) {
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace som
