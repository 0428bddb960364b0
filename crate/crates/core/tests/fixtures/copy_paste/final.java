public class Geometry {
    static double area(double w, double h) {
        return w * h;
    }

    static double perimeter(double w, double h) {
        return 2 * (w + h);
    }

    public static void main(String[] args) {
        double w = 3.0;
        double h = 4.5;
        System.out.println(area(w, h));
        System.out.println(perimeter(w, h));
    }
}
