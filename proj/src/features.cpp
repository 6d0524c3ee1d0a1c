#include "retinabow/features.hpp"

namespace rbow {

int descriptor_dim(DescriptorKind kind) {
    switch (kind) {
        case DescriptorKind::Surf: return 64;
        case DescriptorKind::Dsurf: return 192;
        case DescriptorKind::Hog: return 93;
        case DescriptorKind::Lbp: return 174;
    }
    throw std::invalid_argument("descriptor_dim: unknown kind");
}

std::string kind_name(DescriptorKind kind) {
    switch (kind) {
        case DescriptorKind::Surf: return "surf";
        case DescriptorKind::Dsurf: return "dsurf";
        case DescriptorKind::Hog: return "hog";
        case DescriptorKind::Lbp: return "lbp";
    }
    throw std::invalid_argument("kind_name: unknown kind");
}

DescriptorKind kind_from_name(const std::string& name) {
    if (name == "surf") return DescriptorKind::Surf;
    if (name == "dsurf") return DescriptorKind::Dsurf;
    if (name == "hog") return DescriptorKind::Hog;
    if (name == "lbp") return DescriptorKind::Lbp;
    throw std::invalid_argument("kind_from_name: unknown kind '" + name + "'");
}

}  // namespace rbow
