package com.example.app10;

public class MainActivity {
    private String name = "item 10";

    public String label(int count) {
        String prefix = name.toUpperCase();
        return prefix + ":" + (count + 10);
    }

    public int total(int[] values) {
        int sum = 0;
        for (int v : values) {
            sum += v;
        }
        return sum;
    }
}
