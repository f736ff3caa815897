package com.example.app15;

public class MainActivity {
    private String name = "item 15";

    public String label(int count) {
        String prefix = name.toUpperCase();
        return prefix + ":" + (count + 15);
    }

    public int total(int[] values) {
        int sum = 0;
        for (int v : values) {
            sum += v;
        }
        return sum;
    }
}
