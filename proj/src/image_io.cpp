#include "retinabow/image_io.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <stdexcept>

namespace rbow {

RgbImage load_image(const std::string& path) {
    cv::Mat mat = cv::imread(path, cv::IMREAD_UNCHANGED);
    if (mat.empty()) throw std::runtime_error("load_image: cannot decode " + path);

    if (mat.depth() == CV_16U) {
        mat.convertTo(mat, CV_8U, 1.0 / 257.0);
    } else if (mat.depth() != CV_8U) {
        mat.convertTo(mat, CV_8U, 255.0);
    }

    RgbImage img;
    img.red = Plane(mat.cols, mat.rows);
    img.green = Plane(mat.cols, mat.rows);
    img.blue = Plane(mat.cols, mat.rows);

    const double inv = 1.0 / 255.0;
    for (int y = 0; y < mat.rows; ++y) {
        for (int x = 0; x < mat.cols; ++x) {
            double r, g, b;
            if (mat.channels() == 1) {
                r = g = b = mat.at<uchar>(y, x) * inv;
            } else if (mat.channels() == 3) {
                auto px = mat.at<cv::Vec3b>(y, x);  // BGR
                b = px[0] * inv;
                g = px[1] * inv;
                r = px[2] * inv;
            } else if (mat.channels() == 4) {
                auto px = mat.at<cv::Vec4b>(y, x);
                b = px[0] * inv;
                g = px[1] * inv;
                r = px[2] * inv;
            } else {
                throw std::runtime_error("load_image: unsupported channel count in " + path);
            }
            img.red.at(x, y) = r;
            img.green.at(x, y) = g;
            img.blue.at(x, y) = b;
        }
    }
    return img;
}

namespace {

uchar to_byte(double v) {
    if (v <= 0.0) return 0;
    if (v >= 1.0) return 255;
    return static_cast<uchar>(v * 255.0 + 0.5);
}

}  // namespace

void save_image(const std::string& path, const RgbImage& img) {
    img.check();
    cv::Mat mat(img.height(), img.width(), CV_8UC3);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            mat.at<cv::Vec3b>(y, x) = cv::Vec3b(
                to_byte(img.blue.at(x, y)), to_byte(img.green.at(x, y)), to_byte(img.red.at(x, y)));
        }
    }
    if (!cv::imwrite(path, mat)) throw std::runtime_error("save_image: cannot write " + path);
}

void save_image(const std::string& path, const Plane& gray) {
    cv::Mat mat(gray.height, gray.width, CV_8UC1);
    for (int y = 0; y < gray.height; ++y)
        for (int x = 0; x < gray.width; ++x) mat.at<uchar>(y, x) = to_byte(gray.at(x, y));
    if (!cv::imwrite(path, mat)) throw std::runtime_error("save_image: cannot write " + path);
}

}  // namespace rbow
